#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rme/ingest.hpp"
#include "rme/sppmi.hpp"

namespace rme::model {

struct Toggles {
    bool use_lie = true;  // co-liked item embedding (X term)
    bool use_die = true;  // co-disliked item embedding (Y term)
    bool use_ue = true;   // user embedding (Z term)
};

struct Hyperparams {
    std::int32_t k = 8;
    double lambda_factor = 0.01;   // ridge on alpha, beta
    double lambda_context = 0.01;  // ridge on gamma, delta, theta
    double l = 1.0;                // weight of unobserved cells
    double phi = 10.0;             // w_up = l * (1 + phi * M_up)
    double w_pos_item = 1.0;
    double w_neg_item = 1.0;
    double w_user = 1.0;
    double s = 1.0;  // SPPMI shift
    std::int32_t max_sweeps = 20;
    std::int32_t patience = 1;

    double observed_weight() const { return l * (1.0 + phi); }
    void validate() const;  // throws Error{Config}
};

// All learned parameters. Rows of the factor matrices are the per-entity
// latent vectors; disabled blocks stay exactly zero.
struct ModelState {
    Eigen::MatrixXd alpha;  // m x k user factors
    Eigen::MatrixXd beta;   // n x k item factors
    Eigen::MatrixXd gamma;  // n x k co-liked context factors
    Eigen::MatrixXd delta;  // n x k co-disliked context factors
    Eigen::MatrixXd theta;  // m x k user context factors
    Eigen::VectorXd bias_b, bias_c;  // n: co-liked item / context bias
    Eigen::VectorXd bias_d, bias_e;  // n: co-disliked item / context bias
    Eigen::VectorXd bias_f, bias_g;  // m: user / user context bias
    Toggles toggles;
    Hyperparams hp;
    std::vector<std::string> user_ids;
    std::vector<std::string> item_ids;

    std::int32_t num_users() const { return static_cast<std::int32_t>(alpha.rows()); }
    std::int32_t num_items() const { return static_cast<std::int32_t>(beta.rows()); }
    std::int32_t k() const { return static_cast<std::int32_t>(alpha.cols()); }
};

// Factors drawn i.i.d. uniform in [-1/sqrt(k), 1/sqrt(k)], biases zero,
// disabled blocks zero. Draw order is fixed: alpha, beta, gamma, delta,
// theta, row-major.
ModelState init_state(const ingest::InteractionMatrix& m, const Hyperparams& hp,
                      const Toggles& toggles, std::uint64_t seed);

// Full joint objective; toggled-off terms contribute exactly zero.
double objective(const ModelState& state, const ingest::InteractionMatrix& m,
                 const cooccur::SppmiMatrix& x, const cooccur::SppmiMatrix& y,
                 const cooccur::SppmiMatrix& z);

// Per-row exact k x k ridge solves, all rows of the block.
void update_user_factors(ModelState& state, const ingest::InteractionMatrix& m,
                         const cooccur::SppmiMatrix& z);
void update_item_factors(ModelState& state, const ingest::InteractionMatrix& m,
                         const cooccur::SppmiMatrix& x, const cooccur::SppmiMatrix& y);
void update_context_factors(ModelState& state, const cooccur::SppmiMatrix& x,
                            const cooccur::SppmiMatrix& y, const cooccur::SppmiMatrix& z);

// Mean-residual bias updates, one vector at a time in the order
// b, c, d, e, f, g. Empty rows keep their value.
void update_bias_b(ModelState& state, const cooccur::SppmiMatrix& x);
void update_bias_c(ModelState& state, const cooccur::SppmiMatrix& x);
void update_bias_d(ModelState& state, const cooccur::SppmiMatrix& y);
void update_bias_e(ModelState& state, const cooccur::SppmiMatrix& y);
void update_bias_f(ModelState& state, const cooccur::SppmiMatrix& z);
void update_bias_g(ModelState& state, const cooccur::SppmiMatrix& z);
void update_biases(ModelState& state, const cooccur::SppmiMatrix& x,
                   const cooccur::SppmiMatrix& y, const cooccur::SppmiMatrix& z);

struct SweepRecord {
    std::int32_t sweep = 0;
    double objective = 0.0;
    double valid_ndcg = 0.0;  // NaN when no validation scorer was given
};

struct TrainResult {
    ModelState state;  // best-validation state (final state without a scorer)
    std::vector<SweepRecord> history;
    std::int32_t best_sweep = 0;
};

// Validation score used for early stopping (higher is better).
using ValidationScorer = std::function<double(const ModelState&)>;

// Sweeps of alpha -> beta -> contexts -> biases. With a scorer, stops
// after `patience` sweeps without improvement and returns the best state.
TrainResult train(const ingest::InteractionMatrix& m, const cooccur::SppmiMatrix& x,
                  const cooccur::SppmiMatrix& y, const cooccur::SppmiMatrix& z,
                  const Hyperparams& hp, const Toggles& toggles, std::uint64_t seed,
                  const ValidationScorer& scorer = nullptr);

// Same, continuing from an existing state (warm start).
TrainResult train_from(ModelState initial, const ingest::InteractionMatrix& m,
                       const cooccur::SppmiMatrix& x, const cooccur::SppmiMatrix& y,
                       const cooccur::SppmiMatrix& z, const ValidationScorer& scorer = nullptr);

// beta * alpha_u; biases and contexts are not used at prediction time.
Eigen::VectorXd predict_scores(const ModelState& state, std::int32_t u);

// Versioned container, bit-exact round-trip.
void save_model(const ModelState& state, const std::string& path);
ModelState load_model(const std::string& path);

}  // namespace rme::model
