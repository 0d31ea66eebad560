#include "rme/sppmi.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rme::cooccur {

PairCounts generate_pairs(const std::vector<std::vector<std::int32_t>>& lists,
                          std::int32_t vocab) {
    PairCounts counts;
    counts.marginal.assign(static_cast<std::size_t>(vocab), 0);
    for (const auto& list : lists) {
        const std::int64_t len = static_cast<std::int64_t>(list.size());
        if (len < 2) continue;
        for (std::int64_t a = 0; a < len; ++a) {
            counts.marginal[list[a]] += len - 1;
            for (std::int64_t b = 0; b < len; ++b) {
                if (a == b) continue;
                ++counts.pair[PairCounts::key(list[a], list[b])];
            }
        }
        counts.total += len * (len - 1);
    }
    return counts;
}

double pmi(const PairCounts& counts, std::int32_t i, std::int32_t j) {
    const std::int64_t joint = counts.pair_count(i, j);
    if (joint == 0)
        throw Error(ErrorCategory::Data,
                    "pmi undefined for pair (" + std::to_string(i) + "," + std::to_string(j) + ")");
    return std::log(static_cast<double>(joint) * static_cast<double>(counts.total) /
                    (static_cast<double>(counts.marginal[i]) *
                     static_cast<double>(counts.marginal[j])));
}

SppmiMatrix::SppmiMatrix(std::int32_t dim, double shift) : dim_(dim), shift_(shift) {
    rows_.resize(static_cast<std::size_t>(dim));
}

double SppmiMatrix::at(std::int32_t i, std::int32_t j) const {
    const auto& r = rows_[i];
    auto it = std::lower_bound(r.begin(), r.end(), j,
                               [](const auto& e, std::int32_t col) { return e.first < col; });
    return (it != r.end() && it->first == j) ? it->second : 0.0;
}

void SppmiMatrix::insert_symmetric(std::int32_t i, std::int32_t j, double v) {
    rows_[i].emplace_back(j, v);
    rows_[j].emplace_back(i, v);
    nnz_ += 2;
}

void SppmiMatrix::sort_rows() {
    for (auto& r : rows_)
        std::sort(r.begin(), r.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
}

SppmiMatrix build_sppmi(const PairCounts& counts, double s) {
    if (s <= 0) throw Error(ErrorCategory::Config, "sppmi shift must be positive");
    SppmiMatrix mat(static_cast<std::int32_t>(counts.marginal.size()), s);
    const double log_s = std::log(s);
    for (const auto& [key, joint] : counts.pair) {
        const std::int32_t i = static_cast<std::int32_t>(key >> 32);
        const std::int32_t j = static_cast<std::int32_t>(key & 0xffffffffu);
        if (i >= j) continue;  // stored pairs are symmetric; emit each once
        const double value = pmi(counts, i, j) - log_s;
        if (value > 0.0) mat.insert_symmetric(i, j, value);
    }
    mat.sort_rows();
    return mat;
}

namespace {

SppmiMatrix build_from_lists(const std::vector<std::vector<std::int32_t>>& lists,
                             std::int32_t vocab, double s) {
    return build_sppmi(generate_pairs(lists, vocab), s);
}

}  // namespace

SppmiMatrix build_x(const ingest::InteractionMatrix& train, double s) {
    std::vector<std::vector<std::int32_t>> lists;
    lists.reserve(train.num_users());
    for (std::int32_t u = 0; u < train.num_users(); ++u) lists.push_back(train.liked_items(u));
    return build_from_lists(lists, train.num_items(), s);
}

SppmiMatrix build_y(const ingest::InteractionMatrix& train, double s) {
    std::vector<std::vector<std::int32_t>> lists;
    lists.reserve(train.num_users());
    for (std::int32_t u = 0; u < train.num_users(); ++u) lists.push_back(train.disliked_items(u));
    return build_from_lists(lists, train.num_items(), s);
}

SppmiMatrix build_y_from_lists(const std::vector<std::vector<std::int32_t>>& disliked,
                               std::int32_t n_items, double s) {
    return build_from_lists(disliked, n_items, s);
}

SppmiMatrix build_z(const ingest::InteractionMatrix& train, double s) {
    std::vector<std::vector<std::int32_t>> lists;
    lists.reserve(train.num_items());
    for (std::int32_t p = 0; p < train.num_items(); ++p) lists.push_back(train.likers(p));
    return build_from_lists(lists, train.num_users(), s);
}

void dump_sppmi(const SppmiMatrix& mat, std::ostream& out) {
    out << "# sppmi dim=" << mat.dim() << " s=";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", mat.shift());
    out << buf << "\n";
    for (std::int32_t i = 0; i < mat.dim(); ++i) {
        for (const auto& [j, v] : mat.row(i)) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << i << "\t" << j << "\t" << buf << "\n";
        }
    }
}

void dump_sppmi_file(const SppmiMatrix& mat, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::Io, "cannot write '" + path + "'");
    dump_sppmi(mat, out);
}

SppmiMatrix load_sppmi_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::Io, "cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw Error(ErrorCategory::Parse, path + ": empty sppmi file");
    std::int32_t dim = 0;
    double s = 1.0;
    if (std::sscanf(header.c_str(), "# sppmi dim=%d s=%lg", &dim, &s) != 2)
        throw Error(ErrorCategory::Parse, path + ": bad sppmi header");
    SppmiMatrix mat(dim, s);
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::int32_t i, j;
        double v;
        if (std::sscanf(line.c_str(), "%d\t%d\t%lg", &i, &j, &v) != 3)
            throw Error(ErrorCategory::Parse,
                        path + ":" + std::to_string(line_no) + ": bad sppmi entry");
        if (i < j) mat.insert_symmetric(i, j, v);  // file carries both directions
    }
    mat.sort_rows();
    return mat;
}

}  // namespace rme::cooccur
