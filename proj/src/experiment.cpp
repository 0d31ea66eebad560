#include "rme/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "rme/eval.hpp"
#include "rme/rng.hpp"

namespace fs = std::filesystem;

namespace rme::cli {

namespace {

const std::map<std::string, std::string>& default_values() {
    static const std::map<std::string, std::string> defaults = {
        {"data.path", ""},
        {"data.format", "ml"},
        {"data.feedback", "explicit"},
        {"data.like_min", "4"},
        {"data.dislike_max", "2"},
        {"data.like_min_count", "1"},
        {"data.user_min", "5"},
        {"data.item_min", "5"},
        {"split.mode", "time"},
        {"split.seed", "1"},
        {"split.fold", "0"},
        {"split.fold_count", "1"},
        {"split.train_frac", "0.7"},
        {"split.valid_frac", "0.1"},
        {"split.test_frac", "0.2"},
        {"model.variant", "rme"},
        {"model.k", "8"},
        {"model.lambda", "0.01"},
        {"model.lambda1", ""},
        {"model.lambda2", ""},
        {"model.l", "1"},
        {"model.phi", "10"},
        {"model.w_pos", "1"},
        {"model.w_neg", "1"},
        {"model.w_user", "1"},
        {"model.s", "1"},
        {"model.max_sweeps", "20"},
        {"model.patience", "1"},
        {"model.seed", "1"},
        {"negsample.tau", "0.2"},
        {"negsample.max_iter", "10"},
        {"negsample.seed", "1"},
        {"negsample.uniform_fallback", "false"},
        {"negsample.cold_start", "false"},
        {"eval.ns", "5,10,20,50,100"},
        {"eval.valid_n", "100"},
        {"grid.parallel", "false"},
        {"output.dir", "out"},
        {"output.run_id", "run0"},
        {"output.dump_sppmi", "false"},
    };
    return defaults;
}

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::Io, "cannot write '" + path + "'");
    out << text;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::Io, "cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

ExperimentConfig::ExperimentConfig() : values_(default_values()) {}

void ExperimentConfig::load_file(const std::string& path) {
    parse_text(read_text_file(path), path);
}

void ExperimentConfig::parse_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw Error(ErrorCategory::Parse,
                            origin + ":" + std::to_string(line_no) + ": empty section name");
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCategory::Parse,
                        origin + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (section.empty())
            throw Error(ErrorCategory::Parse,
                        origin + ":" + std::to_string(line_no) + ": key outside any [section]");
        set(section + "." + key, value);
    }
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end())
        throw Error(ErrorCategory::Config, "unknown config key '" + key + "'");
    it->second = value;
}

const std::string& ExperimentConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
        throw Error(ErrorCategory::Config, "unknown config key '" + key + "'");
    return it->second;
}

std::string ExperimentConfig::get_or(const std::string& key, const std::string& fallback) const {
    const std::string& v = get(key);
    return v.empty() ? fallback : v;
}

double ExperimentConfig::get_double(const std::string& key) const {
    const std::string& v = get(key);
    double out = 0;
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end)
        throw Error(ErrorCategory::Config, "config key '" + key + "' is not a number: '" + v + "'");
    return out;
}

std::int64_t ExperimentConfig::get_int(const std::string& key) const {
    const std::string& v = get(key);
    std::int64_t out = 0;
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end)
        throw Error(ErrorCategory::Config, "config key '" + key + "' is not an integer: '" + v + "'");
    return out;
}

bool ExperimentConfig::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorCategory::Config, "config key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<std::int32_t> ExperimentConfig::get_int_list(const std::string& key) const {
    const std::string& v = get(key);
    std::vector<std::int32_t> out;
    std::size_t pos = 0;
    while (pos <= v.size()) {
        std::size_t next = v.find(',', pos);
        if (next == std::string::npos) next = v.size();
        const std::string tok = trim(v.substr(pos, next - pos));
        if (!tok.empty()) {
            std::int32_t n = 0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), n);
            if (ec != std::errc() || p != tok.data() + tok.size() || n < 1)
                throw Error(ErrorCategory::Config,
                            "config key '" + key + "' has a bad list entry: '" + tok + "'");
            out.push_back(n);
        }
        pos = next + 1;
    }
    if (out.empty()) throw Error(ErrorCategory::Config, "config key '" + key + "' is empty");
    return out;
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream os;
    std::string section;
    for (const auto& [key, value] : values_) {
        const std::size_t dot = key.find('.');
        const std::string sec = key.substr(0, dot);
        if (sec != section) {
            if (!section.empty()) os << "\n";
            os << "[" << sec << "]\n";
            section = sec;
        }
        os << key.substr(dot + 1) << " = " << value << "\n";
    }
    return os.str();
}

model::Hyperparams ExperimentConfig::hyperparams() const {
    model::Hyperparams hp;
    hp.k = static_cast<std::int32_t>(get_int("model.k"));
    const double lambda = get_double("model.lambda");
    hp.lambda_factor = get("model.lambda1").empty() ? lambda : get_double("model.lambda1");
    hp.lambda_context = get("model.lambda2").empty() ? lambda : get_double("model.lambda2");
    hp.l = get_double("model.l");
    hp.phi = get_double("model.phi");
    hp.w_pos_item = get_double("model.w_pos");
    hp.w_neg_item = get_double("model.w_neg");
    hp.w_user = get_double("model.w_user");
    hp.s = get_double("model.s");
    hp.max_sweeps = static_cast<std::int32_t>(get_int("model.max_sweeps"));
    hp.patience = static_cast<std::int32_t>(get_int("model.patience"));
    hp.validate();
    return hp;
}

model::Toggles ExperimentConfig::toggles() const {
    const std::string& variant = get("model.variant");
    if (variant == "wmf") return {false, false, false};
    if (variant == "cofactor") return {true, false, false};
    if (variant == "u_rme") return {true, false, true};
    if (variant == "i_rme") return {true, true, false};
    if (variant == "rme") return {true, true, true};
    throw Error(ErrorCategory::Config, "unknown model variant '" + variant + "'");
}

negsample::NegSampleConfig ExperimentConfig::negsample() const {
    negsample::NegSampleConfig cfg;
    cfg.tau = get_double("negsample.tau");
    cfg.max_iter = static_cast<std::int32_t>(get_int("negsample.max_iter"));
    cfg.seed = static_cast<std::uint64_t>(get_int("negsample.seed"));
    cfg.uniform_fallback = get_bool("negsample.uniform_fallback");
    cfg.cold_start = get_bool("negsample.cold_start");
    cfg.validate();
    return cfg;
}

ingest::SplitSpec ExperimentConfig::split_spec() const {
    ingest::SplitSpec spec;
    spec.train_frac = get_double("split.train_frac");
    spec.valid_frac = get_double("split.valid_frac");
    spec.test_frac = get_double("split.test_frac");
    spec.mode = ingest::parse_split_mode(get("split.mode"));
    spec.fold_count = static_cast<std::int32_t>(get_int("split.fold_count"));
    const std::int64_t fold = get_int("split.fold");
    if (fold < 0 || fold >= spec.fold_count)
        throw Error(ErrorCategory::Config, "split.fold out of range");
    spec.seed = ingest::SplitSpec{.seed = static_cast<std::uint64_t>(get_int("split.seed"))}
                    .fold_seed(static_cast<std::int32_t>(fold));
    spec.validate();
    return spec;
}

ingest::BinarizePolicy ExperimentConfig::binarize_policy() const {
    if (implicit_feedback())
        return ingest::BinarizePolicy::implicit_feedback(get_double("data.like_min_count"));
    return ingest::BinarizePolicy::explicit_feedback(get_double("data.like_min"),
                                                     get_double("data.dislike_max"));
}

bool ExperimentConfig::implicit_feedback() const {
    const std::string& fb = get("data.feedback");
    if (fb == "implicit") return true;
    if (fb == "explicit") return false;
    throw Error(ErrorCategory::Config, "data.feedback must be explicit or implicit");
}

std::string ExperimentConfig::run_dir(const std::string& kind) const {
    return get("output.dir") + "/" + kind + "/" + get("output.run_id");
}

void ExperimentConfig::validate() const {
    hyperparams();
    toggles();
    split_spec();
    binarize_policy();
    get_int_list("eval.ns");
    if (implicit_feedback()) negsample();
    if (get("data.path").empty())
        throw Error(ErrorCategory::Config, "data.path is required");
    ingest::parse_format(get("data.format"));
    if (get_int("data.user_min") < 1 || get_int("data.item_min") < 1)
        throw Error(ErrorCategory::Config, "k-core thresholds must be >= 1");
}

// ---- split artifacts --------------------------------------------------------

namespace {

void write_id_file(const std::string& path, const std::vector<std::string>& ids) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::Io, "cannot write '" + path + "'");
    for (const auto& id : ids) out << id << "\n";
}

std::shared_ptr<const std::vector<std::string>> read_id_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::Io, "cannot open '" + path + "' (run prep first?)");
    auto ids = std::make_shared<std::vector<std::string>>();
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ids->push_back(line);
    }
    return ids;
}

void write_cells_file(const std::string& path, const ingest::InteractionMatrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::Io, "cannot write '" + path + "'");
    for (const auto& c : m.cells()) {
        out << c.user << "\t" << c.item << "\t" << (c.label == Label::Liked ? 'L' : 'D') << "\t";
        if (c.has_timestamp)
            out << c.timestamp;
        else
            out << "-";
        out << "\n";
    }
}

ingest::InteractionMatrix read_cells_file(
    const std::string& path, std::shared_ptr<const std::vector<std::string>> users,
    std::shared_ptr<const std::vector<std::string>> items) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::Io, "cannot open '" + path + "' (run prep first?)");
    std::vector<Cell> cells;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        Cell c;
        char label = 0;
        char ts_buf[32] = {0};
        if (std::sscanf(line.c_str(), "%d\t%d\t%c\t%31s", &c.user, &c.item, &label, ts_buf) != 4 ||
            (label != 'L' && label != 'D'))
            throw Error(ErrorCategory::Parse, path + ":" + std::to_string(line_no) + ": bad cell");
        c.label = label == 'L' ? Label::Liked : Label::Disliked;
        if (ts_buf[0] == '-' && ts_buf[1] == '\0') {
            c.has_timestamp = false;
        } else {
            c.has_timestamp = true;
            c.timestamp = std::strtoll(ts_buf, nullptr, 10);
        }
        cells.push_back(c);
    }
    return ingest::InteractionMatrix(std::move(cells), std::move(users), std::move(items));
}

struct LoadedSplits {
    ingest::InteractionMatrix train, valid, test;
};

LoadedSplits load_splits(const std::string& dir) {
    auto users = read_id_file(dir + "/ids_users.txt");
    auto items = read_id_file(dir + "/ids_items.txt");
    LoadedSplits out;
    out.train = read_cells_file(dir + "/train.tsv", users, items);
    out.valid = read_cells_file(dir + "/valid.tsv", users, items);
    out.test = read_cells_file(dir + "/test.tsv", users, items);
    return out;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCategory::Io, "cannot create directory '" + dir + "'");
}

}  // namespace

void run_prep(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto events =
        ingest::parse_events(cfg.get("data.path"), ingest::parse_format(cfg.get("data.format")));
    const auto binarized = ingest::binarize(events, cfg.binarize_policy());
    if (binarized.events.empty())
        throw Error(ErrorCategory::Data, "binarization dropped every event");
    const auto kcore = ingest::kcore_filter(binarized.events, cfg.get_int("data.user_min"),
                                            cfg.get_int("data.item_min"));
    const auto splits = ingest::split(kcore.matrix, cfg.split_spec());

    const std::string dir = cfg.run_dir("splits");
    ensure_dir(dir);
    write_id_file(dir + "/ids_users.txt", kcore.matrix.user_ids());
    write_id_file(dir + "/ids_items.txt", kcore.matrix.item_ids());
    write_cells_file(dir + "/train.tsv", splits.train);
    write_cells_file(dir + "/valid.tsv", splits.valid);
    write_cells_file(dir + "/test.tsv", splits.test);

    std::ostringstream man;
    man << "events_parsed " << events.size() << "\n"
        << "dropped_binarize " << binarized.dropped << "\n"
        << "dropped_duplicates " << kcore.dropped_duplicates << "\n"
        << "kcore_removed_users " << kcore.removed_users << "\n"
        << "kcore_removed_items " << kcore.removed_items << "\n"
        << "users " << kcore.matrix.num_users() << "\n"
        << "items " << kcore.matrix.num_items() << "\n"
        << splits.manifest;
    write_text_file(dir + "/manifest.txt", man.str());
    write_text_file(dir + "/effective.cfg", cfg.to_text());

    if (cfg.get_bool("output.dump_sppmi")) {
        const auto toggles = cfg.toggles();
        const double s = cfg.get_double("model.s");
        const std::string sdir = cfg.run_dir("sppmi");
        ensure_dir(sdir);
        if (toggles.use_lie)
            cooccur::dump_sppmi_file(cooccur::build_x(splits.train, s), sdir + "/X.sppmi");
        // Implicit feedback defers Y to the EM loop: dislikes are inferred.
        if (toggles.use_die && !cfg.implicit_feedback())
            cooccur::dump_sppmi_file(cooccur::build_y(splits.train, s), sdir + "/Y.sppmi");
        if (toggles.use_ue)
            cooccur::dump_sppmi_file(cooccur::build_z(splits.train, s), sdir + "/Z.sppmi");
    }
}

namespace {

std::string fmt_g17(double d) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

std::string history_csv(const std::vector<model::SweepRecord>& recs, std::int32_t iter) {
    std::ostringstream os;
    for (const auto& r : recs) {
        os << iter << "," << r.sweep << "," << fmt_g17(r.objective) << ",";
        if (std::isnan(r.valid_ndcg))
            os << "-";
        else
            os << fmt_g17(r.valid_ndcg);
        os << "\n";
    }
    return os.str();
}

struct TrainOutput {
    model::ModelState state;
    std::string history;     // iter,sweep,objective,valid_ndcg100
    std::string em_history;  // iter,ndcg,accepted (implicit path only)
    double best_valid_ndcg = 0.0;
};

TrainOutput train_for_config(const ExperimentConfig& cfg, const LoadedSplits& splits,
                             const std::string& dump_dir) {
    const auto hp = cfg.hyperparams();
    const auto toggles = cfg.toggles();
    const auto scorer =
        eval::make_ndcg_scorer(splits.train, splits.valid,
                               static_cast<std::int32_t>(cfg.get_int("eval.valid_n")));

    TrainOutput out;
    if (cfg.implicit_feedback() && toggles.use_die) {
        const auto em = negsample::em_train(splits.train, splits.valid, hp, toggles,
                                            cfg.negsample(), dump_dir);
        out.state = em.state;
        std::ostringstream hist, emh;
        hist << "iter,sweep,objective,valid_ndcg\n" << history_csv(em.init_history, 0);
        emh << "iter,ndcg,accepted\n";
        for (const auto& r : em.history) {
            emh << r.iter << "," << fmt_g17(r.ndcg) << "," << (r.accepted ? 1 : 0) << "\n";
            if (r.accepted) out.best_valid_ndcg = r.ndcg;
        }
        out.history = hist.str();
        out.em_history = emh.str();
        if (out.best_valid_ndcg == 0.0 && !em.init_history.empty()) {
            for (const auto& r : em.init_history)
                out.best_valid_ndcg = std::max(out.best_valid_ndcg, r.valid_ndcg);
        }
    } else {
        cooccur::SppmiMatrix x, y, z;
        const double s = hp.s;
        if (toggles.use_lie) x = cooccur::build_x(splits.train, s);
        if (toggles.use_die && !cfg.implicit_feedback()) y = cooccur::build_y(splits.train, s);
        if (toggles.use_ue) z = cooccur::build_z(splits.train, s);
        auto trained = model::train(splits.train, x, y, z, hp, toggles,
                                    static_cast<std::uint64_t>(cfg.get_int("model.seed")), scorer);
        for (const auto& r : trained.history)
            if (r.sweep == trained.best_sweep) out.best_valid_ndcg = r.valid_ndcg;
        out.state = std::move(trained.state);
        out.history = "iter,sweep,objective,valid_ndcg\n" + history_csv(trained.history, 0);
    }
    return out;
}

}  // namespace

void run_train(const ExperimentConfig& cfg, bool dump_negatives) {
    cfg.validate();
    if (dump_negatives && !(cfg.implicit_feedback() && cfg.toggles().use_die))
        throw Error(ErrorCategory::Config,
                    "negdump needs implicit feedback and a variant with the co-disliked term");
    const auto splits = load_splits(cfg.run_dir("splits"));
    const std::string dir = cfg.run_dir("models");
    ensure_dir(dir);

    auto out = train_for_config(cfg, splits, dump_negatives ? dir : "");
    model::save_model(out.state, dir + "/model.rme");
    write_text_file(dir + "/history.csv", out.history);
    if (!out.em_history.empty()) write_text_file(dir + "/em_history.csv", out.em_history);
    write_text_file(dir + "/effective.cfg", cfg.to_text());
}

void run_eval(const ExperimentConfig& cfg, const std::string& model_path) {
    cfg.validate();
    const std::string path =
        model_path.empty() ? cfg.run_dir("models") + "/model.rme" : model_path;
    const auto state = model::load_model(path);
    const auto splits = load_splits(cfg.run_dir("splits"));
    if (state.user_ids != splits.train.user_ids() || state.item_ids != splits.train.item_ids())
        throw Error(ErrorCategory::Data, "model id tables do not match the split artifacts");

    const auto report =
        eval::evaluate(state, splits.train, splits.test, &splits.valid, cfg.get_int_list("eval.ns"),
                       eval::UserGroupSpec{}, static_cast<std::int32_t>(cfg.get_int("split.fold")));

    const std::string dir = cfg.run_dir("reports");
    ensure_dir(dir);
    write_text_file(dir + "/report.csv", report.to_csv());
    write_text_file(dir + "/summary.txt", report.summary());
    write_text_file(dir + "/effective.cfg", cfg.to_text());
}

// ---- grid search ------------------------------------------------------------

namespace {

struct GridCell {
    std::vector<std::pair<std::string, std::string>> assignments;
    std::string label() const {
        std::string out;
        for (const auto& [k, v] : assignments) {
            if (!out.empty()) out += " ";
            out += k + "=" + v;
        }
        return out;
    }
};

std::vector<GridCell> parse_grid_spec(const std::string& spec) {
    if (trim(spec).empty()) throw Error(ErrorCategory::Config, "empty grid spec");
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        std::size_t next = spec.find(';', pos);
        if (next == std::string::npos) next = spec.size();
        const std::string part = trim(spec.substr(pos, next - pos));
        pos = next + 1;
        if (part.empty()) continue;
        const std::size_t eq = part.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCategory::Config, "grid axis '" + part + "' has no '='");
        const std::string key = trim(part.substr(0, eq));
        std::vector<std::string> values;
        std::size_t vp = eq + 1;
        while (vp <= part.size()) {
            std::size_t vn = part.find(',', vp);
            if (vn == std::string::npos) vn = part.size();
            const std::string v = trim(part.substr(vp, vn - vp));
            if (!v.empty()) values.push_back(v);
            vp = vn + 1;
        }
        if (values.empty())
            throw Error(ErrorCategory::Config, "grid axis '" + key + "' has no values");
        axes.emplace_back(key, values);
    }
    std::vector<GridCell> cells{{}};
    for (const auto& [key, values] : axes) {
        std::vector<GridCell> next;
        next.reserve(cells.size() * values.size());
        for (const auto& cell : cells)
            for (const auto& v : values) {
                GridCell c = cell;
                c.assignments.emplace_back(key, v);
                next.push_back(std::move(c));
            }
        cells = std::move(next);
    }
    return cells;
}

struct GridRow {
    std::int64_t cell = 0;
    std::string params;
    double ndcg = 0.0;
    std::string status = "ok";
};

}  // namespace

std::string run_grid(const ExperimentConfig& cfg, const std::string& grid_spec) {
    cfg.validate();
    const auto cells = parse_grid_spec(grid_spec);
    const auto splits = load_splits(cfg.run_dir("splits"));
    const std::int64_t base_seed = cfg.get_int("model.seed");

    auto run_cell = [&](std::int64_t idx) -> GridRow {
        GridRow row;
        row.cell = idx;
        row.params = cells[idx].label();
        try {
            ExperimentConfig cell_cfg = cfg;
            for (const auto& [k, v] : cells[idx].assignments) cell_cfg.set(k, v);
            cell_cfg.set("model.seed", std::to_string(base_seed + idx));
            cell_cfg.validate();
            auto out = train_for_config(cell_cfg, splits, "");
            row.ndcg = out.best_valid_ndcg;
        } catch (const Error& e) {
            row.status = error_category_name(e.category());
            row.ndcg = -1.0;
        }
        return row;
    };

    std::vector<GridRow> rows(cells.size());
    if (cfg.get_bool("grid.parallel")) {
        std::vector<std::future<GridRow>> futures;
        futures.reserve(cells.size());
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(cells.size()); ++i)
            futures.push_back(std::async(std::launch::async, run_cell, i));
        for (std::size_t i = 0; i < futures.size(); ++i) rows[i] = futures[i].get();
    } else {
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(cells.size()); ++i)
            rows[i] = run_cell(i);
    }

    std::stable_sort(rows.begin(), rows.end(), [](const GridRow& a, const GridRow& b) {
        if ((a.status == "ok") != (b.status == "ok")) return a.status == "ok";
        if (a.ndcg != b.ndcg) return a.ndcg > b.ndcg;
        return a.cell < b.cell;
    });

    std::ostringstream os;
    os << "rank,cell,params,valid_ndcg,status\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        os << (r + 1) << "," << rows[r].cell << "," << rows[r].params << ",";
        if (rows[r].status == "ok")
            os << fmt_g17(rows[r].ndcg);
        else
            os << "-";
        os << "," << rows[r].status << "\n";
    }
    const std::string dir = cfg.run_dir("reports");
    ensure_dir(dir);
    const std::string path = dir + "/grid.csv";
    write_text_file(path, os.str());
    write_text_file(dir + "/effective.cfg", cfg.to_text());
    return path;
}

}  // namespace rme::cli
