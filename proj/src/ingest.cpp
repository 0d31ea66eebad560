#include "rme/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "rme/rng.hpp"

namespace rme::ingest {

namespace {

[[noreturn]] void malformed(const std::string& path, std::size_t line_no, const std::string& what) {
    std::ostringstream os;
    os << path << ":" << line_no << ": malformed line: " << what;
    throw Error(ErrorCategory::Parse, os.str());
}

bool parse_double(std::string_view s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_int64(std::string_view s, std::int64_t& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_fields(std::string_view line, std::string_view sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = line.find(sep, pos);
        if (next == std::string_view::npos) {
            out.push_back(line.substr(pos));
            break;
        }
        out.push_back(line.substr(pos, next - pos));
        pos = next + sep.size();
    }
    return out;
}

RawEvent make_event(const std::string& path, std::size_t line_no,
                    const std::vector<std::string_view>& fields) {
    if (fields.size() < 3 || fields.size() > 4)
        malformed(path, line_no, "expected 3 or 4 fields, got " + std::to_string(fields.size()));
    if (fields[0].empty() || fields[1].empty())
        malformed(path, line_no, "empty user or item id");
    RawEvent ev;
    ev.user = std::string(fields[0]);
    ev.item = std::string(fields[1]);
    if (!parse_double(fields[2], ev.value))
        malformed(path, line_no, "non-numeric value '" + std::string(fields[2]) + "'");
    if (fields.size() == 4) {
        if (!parse_int64(fields[3], ev.timestamp) || ev.timestamp < 0)
            malformed(path, line_no, "bad timestamp '" + std::string(fields[3]) + "'");
        ev.has_timestamp = true;
    }
    return ev;
}

}  // namespace

EventFormat parse_format(const std::string& name) {
    if (name == "ml") return EventFormat::Ml;
    if (name == "tsv") return EventFormat::Tsv;
    if (name == "csv") return EventFormat::Csv;
    throw Error(ErrorCategory::Config, "unknown event format '" + name + "'");
}

const char* format_name(EventFormat f) {
    switch (f) {
        case EventFormat::Ml: return "ml";
        case EventFormat::Tsv: return "tsv";
        case EventFormat::Csv: return "csv";
    }
    return "?";
}

std::vector<RawEvent> parse_events(const std::string& path, EventFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::Io, "cannot open '" + path + "'");

    std::vector<RawEvent> events;
    std::string line;
    std::size_t line_no = 0;
    bool header_pending = format == EventFormat::Csv;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header_pending) {
            header_pending = false;
            if (line.rfind("user,", 0) != 0)
                malformed(path, line_no, "csv header must start with 'user,item,value'");
            continue;
        }
        std::vector<std::string_view> fields;
        switch (format) {
            case EventFormat::Ml: fields = split_fields(line, "::"); break;
            case EventFormat::Tsv: fields = split_fields(line, "\t"); break;
            case EventFormat::Csv: fields = split_fields(line, ","); break;
        }
        events.push_back(make_event(path, line_no, fields));
    }
    if (events.empty()) throw Error(ErrorCategory::Data, "no events in '" + path + "'");
    return events;
}

BinarizePolicy BinarizePolicy::explicit_feedback(double like_min, double dislike_max) {
    BinarizePolicy p;
    p.kind = Kind::Explicit;
    p.like_min = like_min;
    p.dislike_max = dislike_max;
    return p;
}

BinarizePolicy BinarizePolicy::implicit_feedback(double like_min_count) {
    BinarizePolicy p;
    p.kind = Kind::Implicit;
    p.like_min_count = like_min_count;
    return p;
}

BinarizeResult binarize(const std::vector<RawEvent>& events, const BinarizePolicy& policy) {
    BinarizeResult res;
    res.events.reserve(events.size());
    for (const auto& ev : events) {
        Label label;
        if (policy.kind == BinarizePolicy::Kind::Explicit) {
            if (ev.value >= policy.like_min) {
                label = Label::Liked;
            } else if (ev.value <= policy.dislike_max) {
                label = Label::Disliked;
            } else {
                ++res.dropped;
                continue;
            }
        } else {
            if (ev.value >= policy.like_min_count) {
                label = Label::Liked;
            } else {
                ++res.dropped;
                continue;
            }
        }
        res.events.push_back({ev.user, ev.item, label, ev.timestamp, ev.has_timestamp});
    }
    return res;
}

InteractionMatrix::InteractionMatrix(std::vector<Cell> cells,
                                     std::shared_ptr<const std::vector<std::string>> user_ids,
                                     std::shared_ptr<const std::vector<std::string>> item_ids)
    : cells_(std::move(cells)), user_ids_(std::move(user_ids)), item_ids_(std::move(item_ids)) {
    liked_by_user_.resize(user_ids_->size());
    disliked_by_user_.resize(user_ids_->size());
    likers_by_item_.resize(item_ids_->size());
    for (const auto& c : cells_) {
        if (c.user < 0 || c.user >= num_users() || c.item < 0 || c.item >= num_items())
            throw Error(ErrorCategory::Invalid, "cell index out of range");
        if (c.label == Label::Liked) {
            liked_by_user_[c.user].push_back(c.item);
            likers_by_item_[c.item].push_back(c.user);
            ++num_liked_;
        } else {
            disliked_by_user_[c.user].push_back(c.item);
        }
        if (!c.has_timestamp) all_have_ts_ = false;
    }
    for (auto& v : liked_by_user_) std::sort(v.begin(), v.end());
    for (auto& v : disliked_by_user_) std::sort(v.begin(), v.end());
    for (auto& v : likers_by_item_) std::sort(v.begin(), v.end());
}

KcoreResult kcore_filter(const std::vector<LabeledEvent>& events,
                         std::int64_t user_min, std::int64_t item_min) {
    if (user_min < 1 || item_min < 1)
        throw Error(ErrorCategory::Config, "k-core thresholds must be >= 1");

    // Dense staging indices in first-appearance order.
    std::unordered_map<std::string, std::int32_t> user_idx, item_idx;
    std::vector<std::string> users, items;
    struct StagedCell {
        std::int32_t user, item;
        Label label;
        std::int64_t ts;
        bool has_ts;
    };
    std::vector<StagedCell> staged;
    staged.reserve(events.size());
    std::unordered_set<std::uint64_t> seen;
    std::int64_t dup = 0;
    for (const auto& ev : events) {
        auto [uit, unew] = user_idx.try_emplace(ev.user, static_cast<std::int32_t>(users.size()));
        if (unew) users.push_back(ev.user);
        auto [iit, inew] = item_idx.try_emplace(ev.item, static_cast<std::int32_t>(items.size()));
        if (inew) items.push_back(ev.item);
        std::uint64_t key = (static_cast<std::uint64_t>(uit->second) << 32) |
                            static_cast<std::uint32_t>(iit->second);
        if (!seen.insert(key).second) {
            ++dup;
            continue;
        }
        staged.push_back({uit->second, iit->second, ev.label, ev.timestamp, ev.has_timestamp});
    }

    std::vector<char> user_alive(users.size(), 1), item_alive(items.size(), 1);
    std::vector<std::int64_t> user_deg(users.size()), item_deg(items.size()),
        user_liked(users.size());
    bool changed = true;
    while (changed) {
        changed = false;
        std::fill(user_deg.begin(), user_deg.end(), 0);
        std::fill(item_deg.begin(), item_deg.end(), 0);
        std::fill(user_liked.begin(), user_liked.end(), 0);
        for (const auto& c : staged) {
            if (!user_alive[c.user] || !item_alive[c.item]) continue;
            ++user_deg[c.user];
            ++item_deg[c.item];
            if (c.label == Label::Liked) ++user_liked[c.user];
        }
        for (std::size_t u = 0; u < users.size(); ++u) {
            if (user_alive[u] && (user_deg[u] < user_min || user_liked[u] == 0)) {
                user_alive[u] = 0;
                changed = true;
            }
        }
        for (std::size_t p = 0; p < items.size(); ++p) {
            if (item_alive[p] && item_deg[p] < item_min) {
                item_alive[p] = 0;
                changed = true;
            }
        }
    }

    // Re-index survivors, keeping first-appearance order.
    std::vector<std::int32_t> user_map(users.size(), -1), item_map(items.size(), -1);
    auto final_users = std::make_shared<std::vector<std::string>>();
    auto final_items = std::make_shared<std::vector<std::string>>();
    for (std::size_t u = 0; u < users.size(); ++u)
        if (user_alive[u]) {
            user_map[u] = static_cast<std::int32_t>(final_users->size());
            final_users->push_back(users[u]);
        }
    for (std::size_t p = 0; p < items.size(); ++p)
        if (item_alive[p]) {
            item_map[p] = static_cast<std::int32_t>(final_items->size());
            final_items->push_back(items[p]);
        }
    if (final_users->empty() || final_items->empty())
        throw Error(ErrorCategory::Data, "k-core filtering removed everything");

    std::vector<Cell> cells;
    cells.reserve(staged.size());
    for (const auto& c : staged) {
        if (!user_alive[c.user] || !item_alive[c.item]) continue;
        cells.push_back({user_map[c.user], item_map[c.item], c.label, c.ts, c.has_ts});
    }

    KcoreResult res;
    res.removed_users = static_cast<std::int64_t>(users.size() - final_users->size());
    res.removed_items = static_cast<std::int64_t>(items.size() - final_items->size());
    res.dropped_duplicates = dup;
    res.matrix = InteractionMatrix(std::move(cells), std::move(final_users), std::move(final_items));
    return res;
}

SplitMode parse_split_mode(const std::string& name) {
    if (name == "time") return SplitMode::TimeOrdered;
    if (name == "random") return SplitMode::Random;
    throw Error(ErrorCategory::Config, "unknown split mode '" + name + "'");
}

const char* split_mode_name(SplitMode m) {
    return m == SplitMode::TimeOrdered ? "time" : "random";
}

void SplitSpec::validate() const {
    if (std::abs(train_frac + valid_frac + test_frac - 1.0) > 1e-12)
        throw Error(ErrorCategory::Config, "split fractions must sum to 1.0");
    if (train_frac <= 0 || valid_frac < 0 || test_frac < 0)
        throw Error(ErrorCategory::Config, "split fractions must be nonnegative with train > 0");
    if (fold_count < 1) throw Error(ErrorCategory::Config, "fold_count must be >= 1");
}

std::uint64_t SplitSpec::fold_seed(std::int32_t fold) const {
    return seed + static_cast<std::uint64_t>(fold);
}

SplitResult split(const InteractionMatrix& matrix, const SplitSpec& spec) {
    spec.validate();
    const auto& cells = matrix.cells();
    const std::int64_t total = static_cast<std::int64_t>(cells.size());
    if (total == 0) throw Error(ErrorCategory::Data, "cannot split an empty matrix");

    std::vector<std::int64_t> order(cells.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<char> assign(cells.size());  // 0 train, 1 valid, 2 test
    Rng rng(spec.seed);

    if (spec.mode == SplitMode::TimeOrdered) {
        if (!matrix.all_have_timestamps())
            throw Error(ErrorCategory::Data, "time-ordered split requires timestamps on all cells");
        std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
            const Cell& ca = cells[a];
            const Cell& cb = cells[b];
            if (ca.timestamp != cb.timestamp) return ca.timestamp < cb.timestamp;
            if (ca.user != cb.user) return ca.user < cb.user;
            return ca.item < cb.item;
        });
        const std::int64_t n_tv =
            static_cast<std::int64_t>((spec.train_frac + spec.valid_frac) * static_cast<double>(total));
        const double valid_share = spec.valid_frac / (spec.train_frac + spec.valid_frac);
        const std::int64_t n_valid =
            static_cast<std::int64_t>(valid_share * static_cast<double>(n_tv));
        for (std::int64_t i = n_tv; i < total; ++i) assign[order[i]] = 2;
        std::vector<std::int64_t> tv(order.begin(), order.begin() + n_tv);
        rng.shuffle(tv);
        for (std::int64_t i = 0; i < n_valid; ++i) assign[tv[i]] = 1;
    } else {
        rng.shuffle(order);
        const std::int64_t n_train =
            static_cast<std::int64_t>(spec.train_frac * static_cast<double>(total));
        const std::int64_t n_valid =
            static_cast<std::int64_t>((spec.train_frac + spec.valid_frac) * static_cast<double>(total)) -
            n_train;
        for (std::int64_t i = 0; i < total; ++i) {
            if (i < n_train)
                assign[order[i]] = 0;
            else if (i < n_train + n_valid)
                assign[order[i]] = 1;
            else
                assign[order[i]] = 2;
        }
    }

    // Users/items absent from the training cells cannot be scored; drop
    // them from valid/test and count.
    std::vector<char> user_in_train(matrix.num_users(), 0), item_in_train(matrix.num_items(), 0);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (assign[i] == 0) {
            user_in_train[cells[i].user] = 1;
            item_in_train[cells[i].item] = 1;
        }
    }

    std::vector<Cell> train_cells, valid_cells, test_cells;
    std::int64_t dropped = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const Cell& c = cells[i];
        if (assign[i] == 0) {
            train_cells.push_back(c);
        } else if (!user_in_train[c.user] || !item_in_train[c.item]) {
            ++dropped;
        } else if (assign[i] == 1) {
            valid_cells.push_back(c);
        } else {
            test_cells.push_back(c);
        }
    }

    SplitResult res;
    res.train = InteractionMatrix(std::move(train_cells), matrix.user_ids_ptr(), matrix.item_ids_ptr());
    res.valid = InteractionMatrix(std::move(valid_cells), matrix.user_ids_ptr(), matrix.item_ids_ptr());
    res.test = InteractionMatrix(std::move(test_cells), matrix.user_ids_ptr(), matrix.item_ids_ptr());
    res.dropped_cold = dropped;

    std::ostringstream man;
    man << "mode " << split_mode_name(spec.mode) << "\n"
        << "seed " << spec.seed << "\n"
        << "cells_total " << total << "\n"
        << "train " << res.train.num_cells() << "\n"
        << "valid " << res.valid.num_cells() << "\n"
        << "test " << res.test.num_cells() << "\n"
        << "dropped_cold " << dropped << "\n";
    res.manifest = man.str();
    return res;
}

}  // namespace rme::ingest
