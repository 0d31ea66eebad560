#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rme/ingest.hpp"
#include "rme/model.hpp"
#include "rme/negsample.hpp"

namespace rme::cli {

// Flat "key = value" config with [section] headers; keys are addressed as
// "section.key". Unknown keys are rejected so typos fail loudly.
class ExperimentConfig {
public:
    ExperimentConfig();  // defaults

    void load_file(const std::string& path);
    void parse_text(const std::string& text, const std::string& origin);
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<std::int32_t> get_int_list(const std::string& key) const;

    // Effective config, sections sorted, re-loadable.
    std::string to_text() const;

    model::Hyperparams hyperparams() const;
    model::Toggles toggles() const;  // from model.variant
    negsample::NegSampleConfig negsample() const;
    ingest::SplitSpec split_spec() const;
    ingest::BinarizePolicy binarize_policy() const;

    bool implicit_feedback() const;
    std::string run_dir(const std::string& kind) const;  // <outdir>/<kind>/<run_id>

    void validate() const;

private:
    std::map<std::string, std::string> values_;
};

// prep: parse -> binarize -> k-core -> split, materialized under
// <outdir>/splits/<run_id>/ (+ optional SPPMI dumps).
void run_prep(const ExperimentConfig& cfg);

// train: explicit feedback (or no co-disliked term) runs the ALS loop;
// implicit feedback with the co-disliked term runs the EM loop. Writes
// model.rme + history.csv. dump_negatives forces per-iteration audit dumps.
void run_train(const ExperimentConfig& cfg, bool dump_negatives = false);

// eval: load model + splits, write report.csv + summary.txt.
void run_eval(const ExperimentConfig& cfg, const std::string& model_path = "");

// grid: exhaustive cartesian sweep over "key=v1,v2,...;key2=..." config
// overrides, ranked by validation NDCG@100. Per-cell failures are recorded
// and the sweep continues. Writes grid.csv; returns its path.
std::string run_grid(const ExperimentConfig& cfg, const std::string& grid_spec);

}  // namespace rme::cli
