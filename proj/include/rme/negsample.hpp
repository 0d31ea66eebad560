#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rme/ingest.hpp"
#include "rme/model.hpp"

namespace rme::negsample {

struct NegSampleConfig {
    double tau = 0.2;  // negative sample drawing ratio, in (0, 1]
    std::int32_t max_iter = 10;
    std::uint64_t seed = 1;
    bool uniform_fallback = false;  // ablation: uniform prior over unobserved items
    bool cold_start = false;        // reinitialize factors at every outer iteration

    void validate() const;  // throws Error{Config}
};

// Probability of each item being drawn as a negative sample: exactly 0 for
// observed items, softmax of the negated score over the rest (max-shifted).
// Throws Error{Data} when every item is observed.
Eigen::VectorXd sampling_prior(const Eigen::VectorXd& scores,
                               const std::vector<std::int32_t>& observed_sorted);

struct NegativeSampleSet {
    // Per-user draws with replacement, multiplicities kept.
    std::vector<std::vector<std::int32_t>> samples;
    std::int64_t total_draws = 0;
    std::int64_t skipped_users = 0;  // tau * count(u) < 1 or no candidates

    // Distinct sorted items per user, the co-occurrence lists for Y.
    std::vector<std::vector<std::int32_t>> collapsed() const;
};

// floor(tau * count(u)) draws per user from sampling_prior, seeded per
// user so parallel and serial runs match. iter_salt separates E-steps.
NegativeSampleSet draw_negatives(const model::ModelState& state,
                                 const ingest::InteractionMatrix& m,
                                 const NegSampleConfig& cfg, std::uint64_t iter_salt = 0);

struct EmIterRecord {
    std::int32_t iter = 0;
    double ndcg = 0.0;
    bool accepted = false;
};

struct EmResult {
    model::ModelState state;
    std::vector<EmIterRecord> history;
    std::vector<model::SweepRecord> init_history;  // the WMF initialization run
};

// User-oriented EM-like loop: initialize with WMF, then alternate drawing
// personalized negatives (E) and retraining the joint model on the rebuilt
// Y (M), keeping a new state only when validation NDCG@100 improves.
// X and Z depend only on the observed likes and are built once.
// When dump_dir is nonempty, writes negatives_iter<i>.tsv audit files.
EmResult em_train(const ingest::InteractionMatrix& train, const ingest::InteractionMatrix& valid,
                  const model::Hyperparams& hp, const model::Toggles& toggles,
                  const NegSampleConfig& cfg, const std::string& dump_dir = "");

}  // namespace rme::negsample
