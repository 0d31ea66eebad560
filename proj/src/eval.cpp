#include "rme/eval.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace rme::eval {

namespace {

void require_inputs(const std::vector<std::int32_t>& ranked,
                    const std::unordered_set<std::int32_t>& relevant) {
    if (relevant.empty()) throw Error(ErrorCategory::Data, "empty relevant set");
    (void)ranked;
}

}  // namespace

double recall_at(const std::vector<std::int32_t>& ranked,
                 const std::unordered_set<std::int32_t>& relevant, std::int32_t n) {
    require_inputs(ranked, relevant);
    const std::int64_t top = std::min<std::int64_t>(n, static_cast<std::int64_t>(ranked.size()));
    std::int64_t hits = 0;
    for (std::int64_t r = 0; r < top; ++r)
        if (relevant.count(ranked[r])) ++hits;
    const std::int64_t denom = std::min<std::int64_t>(n, static_cast<std::int64_t>(relevant.size()));
    return static_cast<double>(hits) / static_cast<double>(denom);
}

double ndcg_at(const std::vector<std::int32_t>& ranked,
               const std::unordered_set<std::int32_t>& relevant, std::int32_t n) {
    require_inputs(ranked, relevant);
    const std::int64_t top = std::min<std::int64_t>(n, static_cast<std::int64_t>(ranked.size()));
    double dcg = 0.0;
    for (std::int64_t r = 0; r < top; ++r)
        if (relevant.count(ranked[r])) dcg += 1.0 / std::log2(static_cast<double>(r + 2));
    const std::int64_t ideal = std::min<std::int64_t>(n, static_cast<std::int64_t>(relevant.size()));
    double idcg = 0.0;
    for (std::int64_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r + 2));
    return dcg / idcg;
}

double map_at(const std::vector<std::int32_t>& ranked,
              const std::unordered_set<std::int32_t>& relevant, std::int32_t n) {
    require_inputs(ranked, relevant);
    const std::int64_t top = std::min<std::int64_t>(n, static_cast<std::int64_t>(ranked.size()));
    std::int64_t hits = 0;
    double sum_prec = 0.0;
    for (std::int64_t r = 0; r < top; ++r) {
        if (relevant.count(ranked[r])) {
            ++hits;
            sum_prec += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    }
    const std::int64_t denom = std::min<std::int64_t>(n, static_cast<std::int64_t>(relevant.size()));
    return sum_prec / static_cast<double>(denom);
}

std::vector<std::int32_t> rank_items(const Eigen::VectorXd& scores,
                                     const std::vector<std::int32_t>& excluded_sorted,
                                     std::int64_t top_n) {
    const std::int32_t n = static_cast<std::int32_t>(scores.size());
    std::vector<std::int32_t> idx;
    idx.reserve(n);
    std::size_t e = 0;
    for (std::int32_t i = 0; i < n; ++i) {
        while (e < excluded_sorted.size() && excluded_sorted[e] < i) ++e;
        if (e < excluded_sorted.size() && excluded_sorted[e] == i) continue;
        idx.push_back(i);
    }
    auto cmp = [&](std::int32_t a, std::int32_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    if (top_n >= 0 && top_n < static_cast<std::int64_t>(idx.size())) {
        std::partial_sort(idx.begin(), idx.begin() + top_n, idx.end(), cmp);
        idx.resize(top_n);
    } else {
        std::sort(idx.begin(), idx.end(), cmp);
    }
    return idx;
}

const char* group_name(UserGroup g) {
    switch (g) {
        case UserGroup::All: return "all";
        case UserGroup::Cold: return "cold";
        case UserGroup::Warm: return "warm";
        case UserGroup::Active: return "active";
    }
    return "?";
}

double EvalReport::get(UserGroup g, const std::string& metric, std::int32_t n) const {
    for (const auto& v : values)
        if (v.group == g && v.metric == metric && v.n == n) return v.value;
    throw Error(ErrorCategory::Invalid, "metric not present in report");
}

std::string EvalReport::to_csv() const {
    std::ostringstream os;
    os << "fold,group,metric,N,value\n";
    char buf[40];
    for (const auto& v : values) {
        std::snprintf(buf, sizeof buf, "%.10g", v.value);
        os << fold << "," << group_name(v.group) << "," << v.metric << "," << v.n << "," << buf
           << "\n";
    }
    return os.str();
}

std::string EvalReport::summary() const {
    std::ostringstream os;
    os << "fold " << fold << ": evaluated " << users_evaluated << " users (cold " << users_cold
       << ", warm " << users_warm << ", active " << users_active << ")\n";
    char buf[40];
    for (const auto& v : values) {
        if (v.group != UserGroup::All) continue;
        std::snprintf(buf, sizeof buf, "%.6f", v.value);
        os << "  " << v.metric << "@" << v.n << " = " << buf << "\n";
    }
    return os.str();
}

namespace {

std::vector<std::int32_t> merge_sorted(const std::vector<std::int32_t>& a,
                                       const std::vector<std::int32_t>& b) {
    std::vector<std::int32_t> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace

EvalReport evaluate(const model::ModelState& state, const ingest::InteractionMatrix& train,
                    const ingest::InteractionMatrix& test,
                    const ingest::InteractionMatrix* valid_excluded,
                    const std::vector<std::int32_t>& ns, const UserGroupSpec& groups,
                    std::int32_t fold) {
    if (ns.empty()) throw Error(ErrorCategory::Config, "no metric cutoffs given");
    if (state.num_users() != train.num_users() || state.num_items() != train.num_items() ||
        test.num_users() != train.num_users())
        throw Error(ErrorCategory::Invalid, "evaluate: dimension mismatch");

    const std::int32_t n_users = train.num_users();
    const std::int64_t max_n = *std::max_element(ns.begin(), ns.end());

    std::vector<std::int32_t> eval_users;
    for (std::int32_t u = 0; u < n_users; ++u)
        if (!test.liked_items(u).empty()) eval_users.push_back(u);
    if (eval_users.empty()) throw Error(ErrorCategory::Data, "no users with liked test items");

    // per user x per metric x per N
    const std::size_t n_cuts = ns.size();
    std::vector<std::vector<double>> recall(eval_users.size()), ndcg(eval_users.size()),
        map(eval_users.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t ui = 0; ui < static_cast<std::int64_t>(eval_users.size()); ++ui) {
        const std::int32_t u = eval_users[ui];
        const auto& test_liked = test.liked_items(u);
        std::unordered_set<std::int32_t> relevant(test_liked.begin(), test_liked.end());
        std::vector<std::int32_t> excluded = train.liked_items(u);
        if (valid_excluded) excluded = merge_sorted(excluded, valid_excluded->liked_items(u));
        const auto ranked =
            rank_items(model::predict_scores(state, u), excluded, max_n);
        recall[ui].resize(n_cuts);
        ndcg[ui].resize(n_cuts);
        map[ui].resize(n_cuts);
        for (std::size_t c = 0; c < n_cuts; ++c) {
            recall[ui][c] = recall_at(ranked, relevant, ns[c]);
            ndcg[ui][c] = ndcg_at(ranked, relevant, ns[c]);
            map[ui][c] = map_at(ranked, relevant, ns[c]);
        }
    }

    // Activity groups over the evaluated users: 20% / 60% / 20% by
    // ascending train liked count, ties by user index.
    std::vector<std::int64_t> order(eval_users.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        const auto ca = train.liked_items(eval_users[a]).size();
        const auto cb = train.liked_items(eval_users[b]).size();
        if (ca != cb) return ca < cb;
        return eval_users[a] < eval_users[b];
    });
    const std::int64_t e_count = static_cast<std::int64_t>(eval_users.size());
    const std::int64_t cold_end = static_cast<std::int64_t>(groups.cold_frac * static_cast<double>(e_count));
    const std::int64_t active_begin =
        static_cast<std::int64_t>((1.0 - groups.active_frac) * static_cast<double>(e_count));
    std::vector<UserGroup> group_of(eval_users.size());
    for (std::int64_t rank = 0; rank < e_count; ++rank) {
        UserGroup g = UserGroup::Warm;
        if (rank < cold_end) g = UserGroup::Cold;
        else if (rank >= active_begin) g = UserGroup::Active;
        group_of[order[rank]] = g;
    }

    EvalReport report;
    report.fold = fold;
    report.users_evaluated = e_count;
    for (std::int64_t ui = 0; ui < e_count; ++ui) {
        if (group_of[ui] == UserGroup::Cold) ++report.users_cold;
        else if (group_of[ui] == UserGroup::Warm) ++report.users_warm;
        else ++report.users_active;
    }

    auto mean_for = [&](const std::vector<std::vector<double>>& vals, std::size_t cut,
                        UserGroup g) {
        double sum = 0.0;
        std::int64_t count = 0;
        for (std::int64_t ui = 0; ui < e_count; ++ui) {
            if (g != UserGroup::All && group_of[ui] != g) continue;
            sum += vals[ui][cut];
            ++count;
        }
        return count == 0 ? 0.0 : sum / static_cast<double>(count);
    };

    const UserGroup all_groups[] = {UserGroup::All, UserGroup::Cold, UserGroup::Warm,
                                    UserGroup::Active};
    for (UserGroup g : all_groups) {
        for (std::size_t c = 0; c < n_cuts; ++c)
            report.values.push_back({g, "recall", ns[c], mean_for(recall, c, g)});
        for (std::size_t c = 0; c < n_cuts; ++c)
            report.values.push_back({g, "ndcg", ns[c], mean_for(ndcg, c, g)});
        for (std::size_t c = 0; c < n_cuts; ++c)
            report.values.push_back({g, "map", ns[c], mean_for(map, c, g)});
    }
    return report;
}

model::ValidationScorer make_ndcg_scorer(const ingest::InteractionMatrix& train,
                                         const ingest::InteractionMatrix& valid,
                                         std::int32_t n) {
    if (valid.num_liked() == 0)
        throw Error(ErrorCategory::Data, "validation set has no liked items");
    // Copies keep the scorer self-contained.
    return [train, valid, n](const model::ModelState& state) {
        const std::int32_t n_users = train.num_users();
        std::vector<double> per_user(n_users, 0.0);
        std::vector<char> counted(n_users, 0);
#pragma omp parallel for schedule(static)
        for (std::int32_t u = 0; u < n_users; ++u) {
            const auto& v_liked = valid.liked_items(u);
            if (v_liked.empty()) continue;
            std::unordered_set<std::int32_t> relevant(v_liked.begin(), v_liked.end());
            const auto ranked =
                rank_items(model::predict_scores(state, u), train.liked_items(u), n);
            per_user[u] = ndcg_at(ranked, relevant, n);
            counted[u] = 1;
        }
        double sum = 0.0;
        std::int64_t count = 0;
        for (std::int32_t u = 0; u < n_users; ++u) {
            if (!counted[u]) continue;
            sum += per_user[u];
            ++count;
        }
        return count == 0 ? 0.0 : sum / static_cast<double>(count);
    };
}

TTestResult significance(std::span<const double> a, std::span<const double> b, double alpha) {
    if (a.size() < 2 || b.size() < 2)
        throw Error(ErrorCategory::Data, "significance test needs at least two folds per side");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / na;
    const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / nb;
    double ssa = 0.0, ssb = 0.0;
    for (double v : a) ssa += (v - mean_a) * (v - mean_a);
    for (double v : b) ssb += (v - mean_b) * (v - mean_b);
    const double df = na + nb - 2.0;
    const double pooled = (ssa + ssb) / df;

    TTestResult res;
    if (pooled <= 0.0) {
        // Degenerate variance: identical constants either differ surely or not at all.
        if (mean_a == mean_b) {
            res.t = 0.0;
            res.p = 1.0;
            res.significant = false;
        } else {
            res.t = mean_a > mean_b ? std::numeric_limits<double>::infinity()
                                    : -std::numeric_limits<double>::infinity();
            res.p = 0.0;
            res.significant = true;
        }
        return res;
    }
    res.t = (mean_a - mean_b) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
    boost::math::students_t dist(df);
    res.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(res.t)));
    res.significant = res.p < alpha;
    return res;
}

}  // namespace rme::eval
