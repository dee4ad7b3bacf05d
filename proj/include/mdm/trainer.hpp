#pragma once

#include <string>
#include <vector>

#include "mdm/forward_process.hpp"
#include "mdm/optimizer.hpp"
#include "mdm/scaling_laws.hpp"
#include "mdm/synthetic.hpp"
#include "mdm/transformer.hpp"

namespace mdm {

struct TrainConfig {
    MaskSchedule schedule = MaskSchedule::linear();
    AdamWHyper hyper;
    MultiplierTable mults = MultiplierTable::identity();
    double lambda_z = 1e-5;
    double min_lr = 1e-6;
    int batch = 8;               // sequences per optimizer step
    double budget_tokens = 0;    // D; steps = floor(D / (batch * L))
    bool anti_mask = false;      // batches [1,1*,2,2*,...]; batch must be even
    int epochs = 2;              // baseline passes over unique samples
    uint64_t seed = 0;
};

// Runs the training loop and returns the run log entry. The record's D is
// the consumed token count and satisfies D = B*S*L exactly. Validation uses
// the stratified t-grid {0.1,...,0.9} so repeated evaluations of a frozen
// model are bit-identical.
RunRecord train(ToyTransformer& model, const Dataset& data, const TrainConfig& cfg,
                const std::string& checkpoint_path = "");

double validation_loss(const ToyTransformer& model, const Dataset& data,
                       const MaskSchedule& schedule, double lambda_z, uint64_t seed);

// Trace-of-covariance of the minibatch gradient under iid vs anti-masking at
// matched tokens per batch, with a one-sided Welch test for anti < iid.
struct VarianceReport {
    double iid_var = 0;
    double anti_var = 0;
    double t_stat = 0;
    double p_value = 1;  // H1: anti-mask variance < iid variance
    int n_batches = 0;
};

VarianceReport grad_variance_probe(const ToyTransformer& model, const Dataset& data,
                                   const std::vector<double>& t_grid, int n_batches, int batch,
                                   double lambda_z, uint64_t seed);

// One-sided Welch t-test p-value for mean(b) < mean(a).
double welch_one_sided_p(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace mdm
