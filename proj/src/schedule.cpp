#include "mdm/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace mdm {

MaskSchedule MaskSchedule::linear() { return {Family::linear, 0.0}; }
MaskSchedule MaskSchedule::cosine() { return {Family::cosine, 0.0}; }

MaskSchedule MaskSchedule::polynomial(double p) {
    if (p <= 0) throw std::invalid_argument("polynomial schedule needs p > 0");
    return {Family::polynomial, p};
}

MaskSchedule MaskSchedule::geometric(double r) {
    if (r <= 0 || r == 1.0) throw std::invalid_argument("geometric schedule needs r > 0, r != 1");
    return {Family::geometric, r};
}

MaskSchedule MaskSchedule::parse(const std::string& spec) {
    if (spec == "linear") return linear();
    if (spec == "cosine") return cosine();
    if (spec.rfind("poly:", 0) == 0) return polynomial(std::stod(spec.substr(5)));
    if (spec.rfind("geo:", 0) == 0) return geometric(std::stod(spec.substr(4)));
    throw std::invalid_argument("unknown schedule spec: " + spec);
}

double MaskSchedule::alpha_bar(double t) const {
    switch (family_) {
        case Family::linear: return 1.0 - t;
        case Family::cosine: return std::cos(M_PI * t / 2.0);
        case Family::polynomial: return 1.0 - std::pow(t, param_);
        case Family::geometric:
            return 1.0 - (std::pow(param_, t) - 1.0) / (param_ - 1.0);
    }
    return 0.0;
}

double MaskSchedule::alpha_bar_prime(double t) const {
    switch (family_) {
        case Family::linear: return -1.0;
        case Family::cosine: return -(M_PI / 2.0) * std::sin(M_PI * t / 2.0);
        case Family::polynomial: return -param_ * std::pow(t, param_ - 1.0);
        case Family::geometric:
            return -std::pow(param_, t) * std::log(param_) / (param_ - 1.0);
    }
    return 0.0;
}

std::string MaskSchedule::name() const {
    switch (family_) {
        case Family::linear: return "linear";
        case Family::cosine: return "cosine";
        case Family::polynomial: return "poly:" + std::to_string(param_);
        case Family::geometric: return "geo:" + std::to_string(param_);
    }
    return "?";
}

}  // namespace mdm
