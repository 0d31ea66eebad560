#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rme/types.hpp"

namespace rme::ingest {

enum class EventFormat { Ml, Tsv, Csv };

EventFormat parse_format(const std::string& name);
const char* format_name(EventFormat f);

// Reads one RawEvent per line, preserving input order. Throws
// Error{Parse} with the 1-based line number on a malformed line and
// Error{Data} when the file holds no events at all.
std::vector<RawEvent> parse_events(const std::string& path, EventFormat format);

struct BinarizePolicy {
    enum class Kind { Explicit, Implicit };
    Kind kind = Kind::Explicit;
    double like_min = 4.0;        // Explicit: value >= like_min -> Liked
    double dislike_max = 2.0;     // Explicit: value <= dislike_max -> Disliked
    double like_min_count = 1.0;  // Implicit: value >= like_min_count -> Liked

    static BinarizePolicy explicit_feedback(double like_min = 4.0, double dislike_max = 2.0);
    static BinarizePolicy implicit_feedback(double like_min_count = 1.0);
};

struct LabeledEvent {
    std::string user;
    std::string item;
    Label label = Label::Liked;
    std::int64_t timestamp = 0;
    bool has_timestamp = false;
};

struct BinarizeResult {
    std::vector<LabeledEvent> events;
    std::int64_t dropped = 0;  // values in the neutral gap
};

BinarizeResult binarize(const std::vector<RawEvent>& events, const BinarizePolicy& policy);

// Dense re-indexed interaction matrix. The id tables are shared between
// the views produced by split(), so copies stay cheap.
class InteractionMatrix {
public:
    InteractionMatrix() = default;
    InteractionMatrix(std::vector<Cell> cells,
                      std::shared_ptr<const std::vector<std::string>> user_ids,
                      std::shared_ptr<const std::vector<std::string>> item_ids);

    std::int32_t num_users() const { return static_cast<std::int32_t>(user_ids_->size()); }
    std::int32_t num_items() const { return static_cast<std::int32_t>(item_ids_->size()); }
    const std::vector<Cell>& cells() const { return cells_; }
    const std::vector<std::string>& user_ids() const { return *user_ids_; }
    const std::vector<std::string>& item_ids() const { return *item_ids_; }
    std::shared_ptr<const std::vector<std::string>> user_ids_ptr() const { return user_ids_; }
    std::shared_ptr<const std::vector<std::string>> item_ids_ptr() const { return item_ids_; }

    // Adjacency, indices sorted ascending.
    const std::vector<std::int32_t>& liked_items(std::int32_t u) const { return liked_by_user_[u]; }
    const std::vector<std::int32_t>& disliked_items(std::int32_t u) const { return disliked_by_user_[u]; }
    const std::vector<std::int32_t>& likers(std::int32_t p) const { return likers_by_item_[p]; }

    std::int64_t num_cells() const { return static_cast<std::int64_t>(cells_.size()); }
    std::int64_t num_liked() const { return num_liked_; }
    bool all_have_timestamps() const { return all_have_ts_; }

private:
    std::vector<Cell> cells_;
    std::shared_ptr<const std::vector<std::string>> user_ids_ =
        std::make_shared<const std::vector<std::string>>();
    std::shared_ptr<const std::vector<std::string>> item_ids_ =
        std::make_shared<const std::vector<std::string>>();
    std::vector<std::vector<std::int32_t>> liked_by_user_;
    std::vector<std::vector<std::int32_t>> disliked_by_user_;
    std::vector<std::vector<std::int32_t>> likers_by_item_;
    std::int64_t num_liked_ = 0;
    bool all_have_ts_ = true;
};

struct KcoreResult {
    InteractionMatrix matrix;
    std::int64_t removed_users = 0;
    std::int64_t removed_items = 0;
    std::int64_t dropped_duplicates = 0;
};

// Iterates removal of users below user_min interactions (or with no liked
// cell) and items below item_min interactions until a fixed point, then
// re-indexes densely in first-appearance order. Duplicate (user, item)
// pairs keep the first occurrence. Throws Error{Data} when nothing is left.
KcoreResult kcore_filter(const std::vector<LabeledEvent>& events,
                         std::int64_t user_min, std::int64_t item_min);

enum class SplitMode { TimeOrdered, Random };

SplitMode parse_split_mode(const std::string& name);
const char* split_mode_name(SplitMode m);

struct SplitSpec {
    double train_frac = 0.7;
    double valid_frac = 0.1;
    double test_frac = 0.2;
    SplitMode mode = SplitMode::TimeOrdered;
    std::uint64_t seed = 1;
    std::int32_t fold_count = 1;

    void validate() const;  // throws Error{Config}
    std::uint64_t fold_seed(std::int32_t fold) const;
};

struct SplitResult {
    InteractionMatrix train;
    InteractionMatrix valid;
    InteractionMatrix test;
    std::int64_t dropped_cold = 0;  // valid/test cells whose user or item is absent from train
    std::string manifest;           // human-readable counts + seed + mode
};

// TimeOrdered: globally time-sorted cells, ties broken by (user, item);
// first train+valid fraction minus a seeded uniform validation sample,
// last fraction is the test set. Random: seeded uniform shuffle into the
// three fractions. The three views share the parent's id tables.
SplitResult split(const InteractionMatrix& matrix, const SplitSpec& spec);

}  // namespace rme::ingest
