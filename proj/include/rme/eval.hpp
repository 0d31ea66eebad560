#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "rme/ingest.hpp"
#include "rme/model.hpp"

namespace rme::eval {

// ranked must hold distinct items; relevant must be nonempty.
double recall_at(const std::vector<std::int32_t>& ranked,
                 const std::unordered_set<std::int32_t>& relevant, std::int32_t n);
double ndcg_at(const std::vector<std::int32_t>& ranked,
               const std::unordered_set<std::int32_t>& relevant, std::int32_t n);
double map_at(const std::vector<std::int32_t>& ranked,
              const std::unordered_set<std::int32_t>& relevant, std::int32_t n);

// Item indices sorted by (score descending, index ascending), excluded
// items removed, truncated to top_n (top_n < 0 keeps everything).
std::vector<std::int32_t> rank_items(const Eigen::VectorXd& scores,
                                     const std::vector<std::int32_t>& excluded_sorted,
                                     std::int64_t top_n);

enum class UserGroup { All, Cold, Warm, Active };
const char* group_name(UserGroup g);

// Boundaries over evaluated users sorted ascending by liked-item count in
// training data, ties broken by user index: first 20% cold, last 20% active.
struct UserGroupSpec {
    double cold_frac = 0.2;
    double active_frac = 0.2;
};

struct MetricValue {
    UserGroup group = UserGroup::All;
    std::string metric;  // "recall" | "ndcg" | "map"
    std::int32_t n = 0;
    double value = 0.0;
};

struct EvalReport {
    std::int32_t fold = 0;
    std::vector<MetricValue> values;
    std::int64_t users_evaluated = 0;
    std::int64_t users_cold = 0, users_warm = 0, users_active = 0;

    double get(UserGroup g, const std::string& metric, std::int32_t n) const;
    std::string to_csv() const;  // fold,group,metric,N,value
    std::string summary() const;
};

// Scores every item for each test user with at least one liked test item,
// excludes the user's train (and valid) liked items from the ranking, and
// macro-averages the metrics overall and per activity group.
EvalReport evaluate(const model::ModelState& state, const ingest::InteractionMatrix& train,
                    const ingest::InteractionMatrix& test,
                    const ingest::InteractionMatrix* valid_excluded,
                    const std::vector<std::int32_t>& ns, const UserGroupSpec& groups,
                    std::int32_t fold = 0);

// Mean NDCG@n on `valid` with train positives excluded; the stopping
// criterion passed to model::train.
model::ValidationScorer make_ndcg_scorer(const ingest::InteractionMatrix& train,
                                         const ingest::InteractionMatrix& valid,
                                         std::int32_t n = 100);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    bool significant = false;
};

// Non-directional two-sample t-test, pooled variance. Throws Error{Data}
// with fewer than two folds per side.
TTestResult significance(std::span<const double> a, std::span<const double> b,
                         double alpha = 0.05);

}  // namespace rme::eval
