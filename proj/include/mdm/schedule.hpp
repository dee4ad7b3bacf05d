#pragma once

#include <string>

namespace mdm {

// Survival function of the continuous-time masking process. alpha_bar(0)=1,
// alpha_bar(1)=0, strictly decreasing; mask fraction is 1 - alpha_bar.
class MaskSchedule {
public:
    enum class Family { linear, cosine, polynomial, geometric };

    static MaskSchedule linear();
    static MaskSchedule cosine();
    static MaskSchedule polynomial(double p);
    static MaskSchedule geometric(double r);

    // "linear" | "cosine" | "poly:<p>" | "geo:<r>"
    static MaskSchedule parse(const std::string& spec);

    double alpha_bar(double t) const;
    double alpha_bar_prime(double t) const;
    double mask_fraction(double t) const { return 1.0 - alpha_bar(t); }

    Family family() const { return family_; }
    double parameter() const { return param_; }
    std::string name() const;

private:
    MaskSchedule(Family f, double param) : family_(f), param_(param) {}
    Family family_;
    double param_;
};

}  // namespace mdm
