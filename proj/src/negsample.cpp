#include "rme/negsample.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "rme/eval.hpp"
#include "rme/rng.hpp"

namespace rme::negsample {

void NegSampleConfig::validate() const {
    if (tau <= 0 || tau > 1)
        throw Error(ErrorCategory::Config, "tau must be in (0, 1]");
    if (max_iter < 1) throw Error(ErrorCategory::Config, "max_iter must be >= 1");
}

Eigen::VectorXd sampling_prior(const Eigen::VectorXd& scores,
                               const std::vector<std::int32_t>& observed_sorted) {
    const std::int32_t n = static_cast<std::int32_t>(scores.size());
    if (static_cast<std::int64_t>(observed_sorted.size()) >= n)
        throw Error(ErrorCategory::Data, "no unobserved candidate items");

    // Observed items are excluded outright rather than carrying an
    // infinite rank; the softmax runs over the remaining items with the
    // usual max shift.
    std::vector<char> observed(n, 0);
    for (std::int32_t p : observed_sorted) observed[p] = 1;

    double max_neg = -std::numeric_limits<double>::infinity();
    for (std::int32_t i = 0; i < n; ++i) {
        if (observed[i]) continue;
        if (!std::isfinite(scores[i]))
            throw Error(ErrorCategory::Numeric, "non-finite score in sampling prior");
        max_neg = std::max(max_neg, -scores[i]);
    }

    Eigen::VectorXd prior = Eigen::VectorXd::Zero(n);
    double norm = 0.0;
    for (std::int32_t i = 0; i < n; ++i) {
        if (observed[i]) continue;
        const double e = std::exp(-scores[i] - max_neg);
        prior[i] = e;
        norm += e;
    }
    prior /= norm;
    return prior;
}

std::vector<std::vector<std::int32_t>> NegativeSampleSet::collapsed() const {
    std::vector<std::vector<std::int32_t>> out(samples.size());
    for (std::size_t u = 0; u < samples.size(); ++u) {
        out[u] = samples[u];
        std::sort(out[u].begin(), out[u].end());
        out[u].erase(std::unique(out[u].begin(), out[u].end()), out[u].end());
    }
    return out;
}

NegativeSampleSet draw_negatives(const model::ModelState& state,
                                 const ingest::InteractionMatrix& m,
                                 const NegSampleConfig& cfg, std::uint64_t iter_salt) {
    cfg.validate();
    if (state.num_users() != m.num_users() || state.num_items() != m.num_items())
        throw Error(ErrorCategory::Invalid, "draw_negatives: dimension mismatch");

    const std::int32_t n_users = m.num_users();
    const std::int32_t n_items = m.num_items();
    NegativeSampleSet set;
    set.samples.resize(n_users);
    std::vector<std::int64_t> skipped(n_users, 0);

#pragma omp parallel for schedule(static)
    for (std::int32_t u = 0; u < n_users; ++u) {
        const auto& observed = m.liked_items(u);
        const std::int64_t ns =
            static_cast<std::int64_t>(cfg.tau * static_cast<double>(observed.size()));
        if (ns < 1) {
            skipped[u] = 1;
            continue;
        }
        if (static_cast<std::int64_t>(observed.size()) >= n_items) {
            skipped[u] = 1;  // no unobserved candidates
            continue;
        }

        Eigen::VectorXd prior;
        if (cfg.uniform_fallback) {
            prior = Eigen::VectorXd::Zero(n_items);
            const double share =
                1.0 / static_cast<double>(n_items - static_cast<std::int64_t>(observed.size()));
            std::size_t e = 0;
            for (std::int32_t i = 0; i < n_items; ++i) {
                while (e < observed.size() && observed[e] < i) ++e;
                if (e < observed.size() && observed[e] == i) continue;
                prior[i] = share;
            }
        } else {
            prior = sampling_prior(model::predict_scores(state, u), observed);
        }

        std::vector<double> cum(n_items);
        double acc = 0.0;
        for (std::int32_t i = 0; i < n_items; ++i) {
            acc += prior[i];
            cum[i] = acc;
        }

        // Per-user stream so parallel and serial runs agree.
        Rng rng(mix_seed(cfg.seed + 0x9e3779b97f4a7c15ull * iter_salt,
                         static_cast<std::uint64_t>(u)));
        auto& out = set.samples[u];
        out.reserve(ns);
        for (std::int64_t t = 0; t < ns; ++t) {
            const double r = rng.next_double() * acc;
            const auto it = std::upper_bound(cum.begin(), cum.end(), r);
            std::int32_t pick = static_cast<std::int32_t>(std::distance(cum.begin(), it));
            // Flat zero-probability segments are unreachable through
            // upper_bound; only r rounding up to acc needs the clamp.
            if (pick >= n_items) pick = n_items - 1;
            while (pick > 0 && prior[pick] == 0.0) --pick;
            out.push_back(pick);
        }
    }

    for (std::int32_t u = 0; u < n_users; ++u) {
        set.total_draws += static_cast<std::int64_t>(set.samples[u].size());
        set.skipped_users += skipped[u];
    }
    return set;
}

namespace {

void dump_negatives(const std::string& dir, std::int32_t iter, const NegativeSampleSet& set,
                    const ingest::InteractionMatrix& m) {
    const std::string path = dir + "/negatives_iter" + std::to_string(iter) + ".tsv";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::Io, "cannot write '" + path + "'");
    for (std::size_t u = 0; u < set.samples.size(); ++u)
        for (std::int32_t p : set.samples[u])
            out << m.user_ids()[u] << "\t" << m.item_ids()[p] << "\n";
}

}  // namespace

EmResult em_train(const ingest::InteractionMatrix& train, const ingest::InteractionMatrix& valid,
                  const model::Hyperparams& hp, const model::Toggles& toggles,
                  const NegSampleConfig& cfg, const std::string& dump_dir) {
    cfg.validate();
    hp.validate();

    const auto scorer = eval::make_ndcg_scorer(train, valid, 100);

    // X and Z only depend on the observed likes; built once.
    cooccur::SppmiMatrix x, z, empty;
    if (toggles.use_lie) x = cooccur::build_x(train, hp.s);
    if (toggles.use_ue) z = cooccur::build_z(train, hp.s);

    // Initialize step: plain WMF.
    model::Toggles wmf_toggles{false, false, false};
    auto init = model::train(train, empty, empty, empty, hp, wmf_toggles, cfg.seed, scorer);

    EmResult result;
    result.init_history = init.history;
    result.state = std::move(init.state);
    double prev_ndcg = 0.0;

    for (std::int32_t iter = 1; iter <= cfg.max_iter; ++iter) {
        // E-step: personalized negatives from the current factors.
        const auto negatives = draw_negatives(result.state, train, cfg, iter);
        if (!dump_dir.empty()) dump_negatives(dump_dir, iter, negatives, train);
        const auto y = toggles.use_die
                           ? cooccur::build_y_from_lists(negatives.collapsed(),
                                                         train.num_items(), hp.s)
                           : empty;

        // M-step: retrain the joint model on the rebuilt matrices.
        model::TrainResult trained;
        if (cfg.cold_start) {
            trained = model::train(train, x, y, z, hp, toggles,
                                   mix_seed(cfg.seed, static_cast<std::uint64_t>(iter)), scorer);
        } else {
            model::ModelState warm = result.state;
            warm.toggles = toggles;
            trained = model::train_from(std::move(warm), train, x, y, z, scorer);
        }
        double ndcg = 0.0;
        for (const auto& rec : trained.history)
            if (rec.sweep == trained.best_sweep) ndcg = rec.valid_ndcg;

        if (ndcg > prev_ndcg) {
            result.state = std::move(trained.state);
            prev_ndcg = ndcg;
            result.history.push_back({iter, ndcg, true});
        } else {
            result.history.push_back({iter, ndcg, false});
            break;  // early stopping
        }
    }
    return result;
}

}  // namespace rme::negsample
