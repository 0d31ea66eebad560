#include "rme/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "rme/rng.hpp"

namespace rme::model {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

void Hyperparams::validate() const {
    if (k < 1) throw Error(ErrorCategory::Config, "k must be >= 1");
    if (lambda_factor < 0 || lambda_context < 0)
        throw Error(ErrorCategory::Config, "lambda must be >= 0");
    if (l <= 0) throw Error(ErrorCategory::Config, "l must be > 0");
    if (phi < 0) throw Error(ErrorCategory::Config, "phi must be >= 0");
    if (w_pos_item <= 0 || w_neg_item <= 0 || w_user <= 0)
        throw Error(ErrorCategory::Config, "co-occurrence weights must be > 0");
    if (s <= 0) throw Error(ErrorCategory::Config, "s must be > 0");
    if (max_sweeps < 1) throw Error(ErrorCategory::Config, "max_sweeps must be >= 1");
    if (patience < 1) throw Error(ErrorCategory::Config, "patience must be >= 1");
}

ModelState init_state(const ingest::InteractionMatrix& m, const Hyperparams& hp,
                      const Toggles& toggles, std::uint64_t seed) {
    hp.validate();
    const std::int32_t n_users = m.num_users();
    const std::int32_t n_items = m.num_items();
    const std::int32_t k = hp.k;

    ModelState st;
    st.toggles = toggles;
    st.hp = hp;
    st.user_ids = m.user_ids();
    st.item_ids = m.item_ids();
    st.alpha = Mat::Zero(n_users, k);
    st.beta = Mat::Zero(n_items, k);
    st.gamma = Mat::Zero(n_items, k);
    st.delta = Mat::Zero(n_items, k);
    st.theta = Mat::Zero(n_users, k);
    st.bias_b = Vec::Zero(n_items);
    st.bias_c = Vec::Zero(n_items);
    st.bias_d = Vec::Zero(n_items);
    st.bias_e = Vec::Zero(n_items);
    st.bias_f = Vec::Zero(n_users);
    st.bias_g = Vec::Zero(n_users);

    const double scale = 1.0 / std::sqrt(static_cast<double>(k));
    Rng rng(seed);
    auto fill = [&](Mat& mat) {
        for (Eigen::Index r = 0; r < mat.rows(); ++r)
            for (Eigen::Index c = 0; c < mat.cols(); ++c) mat(r, c) = rng.uniform(-scale, scale);
    };
    fill(st.alpha);
    fill(st.beta);
    if (toggles.use_lie) fill(st.gamma);
    if (toggles.use_die) fill(st.delta);
    if (toggles.use_ue) fill(st.theta);
    return st;
}

namespace {

void check_dims(const ModelState& st, const ingest::InteractionMatrix& m,
                const cooccur::SppmiMatrix& x, const cooccur::SppmiMatrix& y,
                const cooccur::SppmiMatrix& z) {
    if (st.num_users() != m.num_users() || st.num_items() != m.num_items())
        throw Error(ErrorCategory::Invalid, "model/matrix dimension mismatch");
    if (st.toggles.use_lie && x.dim() != 0 && x.dim() != st.num_items())
        throw Error(ErrorCategory::Invalid, "X dimension mismatch");
    if (st.toggles.use_die && y.dim() != 0 && y.dim() != st.num_items())
        throw Error(ErrorCategory::Invalid, "Y dimension mismatch");
    if (st.toggles.use_ue && z.dim() != 0 && z.dim() != st.num_users())
        throw Error(ErrorCategory::Invalid, "Z dimension mismatch");
}

// Exact k x k solve; the system is SPD whenever lambda > 0.
Vec solve_spd(const Mat& a, const Vec& rhs, double lambda) {
    if (lambda > 0) return a.llt().solve(rhs);
    Eigen::LDLT<Mat> ldlt(a);
    Vec x = ldlt.solve(rhs);
    const double residual = (a * x - rhs).norm();
    if (!x.allFinite() || residual > 1e-8 * std::max(1.0, rhs.norm()))
        throw Error(ErrorCategory::Numeric, "singular normal equations (lambda = 0)");
    return x;
}

double sum_in_order(const std::vector<double>& partials) {
    double total = 0.0;
    for (double v : partials) total += v;
    return total;
}

}  // namespace

double objective(const ModelState& st, const ingest::InteractionMatrix& m,
                 const cooccur::SppmiMatrix& x, const cooccur::SppmiMatrix& y,
                 const cooccur::SppmiMatrix& z) {
    check_dims(st, m, x, y, z);
    const Hyperparams& hp = st.hp;
    const std::int32_t n_users = st.num_users();
    const std::int32_t n_items = st.num_items();
    const double w_obs = hp.observed_weight();

    // L1 over all (u,p): l * sum_all (a'b)^2 rewritten through the Gram
    // matrix, corrected on observed cells.
    const Mat gram = st.beta.transpose() * st.beta;
    std::vector<double> user_part(n_users, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int32_t u = 0; u < n_users; ++u) {
        const Vec au = st.alpha.row(u).transpose();
        double t = hp.l * au.dot(gram * au);
        for (std::int32_t p : m.liked_items(u)) {
            const double r = au.dot(st.beta.row(p).transpose());
            t += w_obs * (1.0 - r) * (1.0 - r) - hp.l * r * r;
        }
        user_part[u] = t;
    }
    double total = 0.5 * sum_in_order(user_part);

    if (st.toggles.use_lie && x.dim() > 0) {
        std::vector<double> part(n_items, 0.0);
#pragma omp parallel for schedule(static)
        for (std::int32_t p = 0; p < n_items; ++p) {
            double t = 0.0;
            for (const auto& [i, v] : x.row(p)) {
                const double r = v - st.beta.row(p).dot(st.gamma.row(i)) - st.bias_b[p] - st.bias_c[i];
                t += hp.w_pos_item * r * r;
            }
            part[p] = t;
        }
        total += 0.5 * sum_in_order(part);
    }
    if (st.toggles.use_die && y.dim() > 0) {
        std::vector<double> part(n_items, 0.0);
#pragma omp parallel for schedule(static)
        for (std::int32_t p = 0; p < n_items; ++p) {
            double t = 0.0;
            for (const auto& [i, v] : y.row(p)) {
                const double r = v - st.beta.row(p).dot(st.delta.row(i)) - st.bias_d[p] - st.bias_e[i];
                t += hp.w_neg_item * r * r;
            }
            part[p] = t;
        }
        total += 0.5 * sum_in_order(part);
    }
    if (st.toggles.use_ue && z.dim() > 0) {
        std::vector<double> part(n_users, 0.0);
#pragma omp parallel for schedule(static)
        for (std::int32_t u = 0; u < n_users; ++u) {
            double t = 0.0;
            for (const auto& [j, v] : z.row(u)) {
                const double r = v - st.alpha.row(u).dot(st.theta.row(j)) - st.bias_f[u] - st.bias_g[j];
                t += hp.w_user * r * r;
            }
            part[u] = t;
        }
        total += 0.5 * sum_in_order(part);
    }

    total += 0.5 * hp.lambda_factor * (st.alpha.squaredNorm() + st.beta.squaredNorm());
    total += 0.5 * hp.lambda_context *
             (st.gamma.squaredNorm() + st.delta.squaredNorm() + st.theta.squaredNorm());
    return total;
}

void update_user_factors(ModelState& st, const ingest::InteractionMatrix& m,
                         const cooccur::SppmiMatrix& z) {
    const Hyperparams& hp = st.hp;
    const std::int32_t n_users = st.num_users();
    const std::int32_t k = st.k();
    const double w_obs = hp.observed_weight();
    const bool with_z = st.toggles.use_ue && z.dim() > 0;

    const Mat gram = st.beta.transpose() * st.beta;  // sum over all items, weight l
    Mat next(n_users, k);
#pragma omp parallel for schedule(static)
    for (std::int32_t u = 0; u < n_users; ++u) {
        Mat a = hp.l * gram;
        a.diagonal().array() += hp.lambda_factor;
        Vec rhs = Vec::Zero(k);
        for (std::int32_t p : m.liked_items(u)) {
            const Vec bp = st.beta.row(p).transpose();
            a.noalias() += (w_obs - hp.l) * (bp * bp.transpose());
            rhs.noalias() += w_obs * bp;
        }
        if (with_z) {
            for (const auto& [j, v] : z.row(u)) {
                const Vec tj = st.theta.row(j).transpose();
                a.noalias() += hp.w_user * (tj * tj.transpose());
                rhs.noalias() += hp.w_user * (v - st.bias_f[u] - st.bias_g[j]) * tj;
            }
        }
        next.row(u) = solve_spd(a, rhs, hp.lambda_factor).transpose();
    }
    st.alpha = std::move(next);
}

void update_item_factors(ModelState& st, const ingest::InteractionMatrix& m,
                         const cooccur::SppmiMatrix& x, const cooccur::SppmiMatrix& y) {
    const Hyperparams& hp = st.hp;
    const std::int32_t n_items = st.num_items();
    const std::int32_t k = st.k();
    const double w_obs = hp.observed_weight();
    const bool with_x = st.toggles.use_lie && x.dim() > 0;
    const bool with_y = st.toggles.use_die && y.dim() > 0;

    const Mat gram = st.alpha.transpose() * st.alpha;
    Mat next(n_items, k);
#pragma omp parallel for schedule(static)
    for (std::int32_t p = 0; p < n_items; ++p) {
        Mat a = hp.l * gram;
        a.diagonal().array() += hp.lambda_factor;
        Vec rhs = Vec::Zero(k);
        for (std::int32_t u : m.likers(p)) {
            const Vec au = st.alpha.row(u).transpose();
            a.noalias() += (w_obs - hp.l) * (au * au.transpose());
            rhs.noalias() += w_obs * au;
        }
        if (with_x) {
            for (const auto& [i, v] : x.row(p)) {
                const Vec gi = st.gamma.row(i).transpose();
                a.noalias() += hp.w_pos_item * (gi * gi.transpose());
                rhs.noalias() += hp.w_pos_item * (v - st.bias_b[p] - st.bias_c[i]) * gi;
            }
        }
        if (with_y) {
            for (const auto& [i, v] : y.row(p)) {
                const Vec di = st.delta.row(i).transpose();
                a.noalias() += hp.w_neg_item * (di * di.transpose());
                rhs.noalias() += hp.w_neg_item * (v - st.bias_d[p] - st.bias_e[i]) * di;
            }
        }
        next.row(p) = solve_spd(a, rhs, hp.lambda_factor).transpose();
    }
    st.beta = std::move(next);
}

namespace {

// Shared form of the three context solves: rows of `ctx` regress the
// co-occurrence residuals onto the fixed base factors.
void update_context_block(Mat& ctx, const Mat& base, const cooccur::SppmiMatrix& mat,
                          const Vec& bias_focus, const Vec& bias_ctx, double w, double lambda) {
    const std::int32_t dim = static_cast<std::int32_t>(ctx.rows());
    const std::int32_t k = static_cast<std::int32_t>(ctx.cols());
#pragma omp parallel for schedule(static)
    for (std::int32_t i = 0; i < dim; ++i) {
        const auto& row = mat.row(i);
        if (row.empty()) {
            if (lambda > 0) ctx.row(i).setZero();  // ridge-only solution
            continue;
        }
        Mat a = Mat::Zero(k, k);
        a.diagonal().array() += lambda;
        Vec rhs = Vec::Zero(k);
        for (const auto& [p, v] : row) {
            const Vec bp = base.row(p).transpose();
            a.noalias() += w * (bp * bp.transpose());
            rhs.noalias() += w * (v - bias_focus[p] - bias_ctx[i]) * bp;
        }
        ctx.row(i) = solve_spd(a, rhs, lambda).transpose();
    }
}

// Mean residual of a bias vector over its nonzero rows. `other_factor`
// rows pair with the stored column indices; `own` is the bias being
// refreshed, `other` the bias on the opposite side of each pair.
void update_bias_block(Vec& own, const Vec& other, const Mat& focus_factor, const Mat& ctx_factor,
                       const cooccur::SppmiMatrix& mat, bool own_is_focus) {
    const std::int32_t dim = static_cast<std::int32_t>(own.size());
#pragma omp parallel for schedule(static)
    for (std::int32_t i = 0; i < dim; ++i) {
        const auto& row = mat.row(i);
        if (row.empty()) continue;
        double sum = 0.0;
        for (const auto& [j, v] : row) {
            const double pred = own_is_focus ? focus_factor.row(i).dot(ctx_factor.row(j))
                                             : focus_factor.row(j).dot(ctx_factor.row(i));
            sum += v - pred - other[j];
        }
        own[i] = sum / static_cast<double>(row.size());
    }
}

}  // namespace

void update_context_factors(ModelState& st, const cooccur::SppmiMatrix& x,
                            const cooccur::SppmiMatrix& y, const cooccur::SppmiMatrix& z) {
    const Hyperparams& hp = st.hp;
    if (st.toggles.use_lie && x.dim() > 0)
        update_context_block(st.gamma, st.beta, x, st.bias_b, st.bias_c, hp.w_pos_item,
                             hp.lambda_context);
    if (st.toggles.use_die && y.dim() > 0)
        update_context_block(st.delta, st.beta, y, st.bias_d, st.bias_e, hp.w_neg_item,
                             hp.lambda_context);
    if (st.toggles.use_ue && z.dim() > 0)
        update_context_block(st.theta, st.alpha, z, st.bias_f, st.bias_g, hp.w_user,
                             hp.lambda_context);
}

void update_bias_b(ModelState& st, const cooccur::SppmiMatrix& x) {
    if (st.toggles.use_lie && x.dim() > 0)
        update_bias_block(st.bias_b, st.bias_c, st.beta, st.gamma, x, true);
}
void update_bias_c(ModelState& st, const cooccur::SppmiMatrix& x) {
    if (st.toggles.use_lie && x.dim() > 0)
        update_bias_block(st.bias_c, st.bias_b, st.beta, st.gamma, x, false);
}
void update_bias_d(ModelState& st, const cooccur::SppmiMatrix& y) {
    if (st.toggles.use_die && y.dim() > 0)
        update_bias_block(st.bias_d, st.bias_e, st.beta, st.delta, y, true);
}
void update_bias_e(ModelState& st, const cooccur::SppmiMatrix& y) {
    if (st.toggles.use_die && y.dim() > 0)
        update_bias_block(st.bias_e, st.bias_d, st.beta, st.delta, y, false);
}
void update_bias_f(ModelState& st, const cooccur::SppmiMatrix& z) {
    if (st.toggles.use_ue && z.dim() > 0)
        update_bias_block(st.bias_f, st.bias_g, st.alpha, st.theta, z, true);
}
void update_bias_g(ModelState& st, const cooccur::SppmiMatrix& z) {
    if (st.toggles.use_ue && z.dim() > 0)
        update_bias_block(st.bias_g, st.bias_f, st.alpha, st.theta, z, false);
}

void update_biases(ModelState& st, const cooccur::SppmiMatrix& x, const cooccur::SppmiMatrix& y,
                   const cooccur::SppmiMatrix& z) {
    update_bias_b(st, x);
    update_bias_c(st, x);
    update_bias_d(st, y);
    update_bias_e(st, y);
    update_bias_f(st, z);
    update_bias_g(st, z);
}

TrainResult train_from(ModelState initial, const ingest::InteractionMatrix& m,
                       const cooccur::SppmiMatrix& x, const cooccur::SppmiMatrix& y,
                       const cooccur::SppmiMatrix& z, const ValidationScorer& scorer) {
    check_dims(initial, m, x, y, z);
    const Hyperparams& hp = initial.hp;

    TrainResult result;
    ModelState st = std::move(initial);
    double best_score = -std::numeric_limits<double>::infinity();
    std::int32_t stale = 0;
    bool have_best = false;

    for (std::int32_t sweep = 1; sweep <= hp.max_sweeps; ++sweep) {
        update_user_factors(st, m, z);
        update_item_factors(st, m, x, y);
        update_context_factors(st, x, y, z);
        update_biases(st, x, y, z);

        SweepRecord rec;
        rec.sweep = sweep;
        rec.objective = objective(st, m, x, y, z);
        if (!std::isfinite(rec.objective))
            throw Error(ErrorCategory::Numeric,
                        "non-finite objective at sweep " + std::to_string(sweep));
        rec.valid_ndcg = std::numeric_limits<double>::quiet_NaN();

        if (scorer) {
            rec.valid_ndcg = scorer(st);
            if (rec.valid_ndcg > best_score) {
                best_score = rec.valid_ndcg;
                result.state = st;
                result.best_sweep = sweep;
                have_best = true;
                stale = 0;
            } else {
                ++stale;
            }
            result.history.push_back(rec);
            if (stale >= hp.patience) break;
        } else {
            result.history.push_back(rec);
        }
    }
    if (!have_best) {
        result.state = std::move(st);
        result.best_sweep =
            result.history.empty() ? 0 : result.history.back().sweep;
    }
    return result;
}

TrainResult train(const ingest::InteractionMatrix& m, const cooccur::SppmiMatrix& x,
                  const cooccur::SppmiMatrix& y, const cooccur::SppmiMatrix& z,
                  const Hyperparams& hp, const Toggles& toggles, std::uint64_t seed,
                  const ValidationScorer& scorer) {
    return train_from(init_state(m, hp, toggles, seed), m, x, y, z, scorer);
}

Eigen::VectorXd predict_scores(const ModelState& st, std::int32_t u) {
    if (u < 0 || u >= st.num_users())
        throw Error(ErrorCategory::Invalid, "user index out of range");
    return st.beta * st.alpha.row(u).transpose();
}

// ---- persistence -----------------------------------------------------------

namespace {

void write_u64_le(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

void write_f64_le(std::ostream& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    write_u64_le(out, bits);
}

std::uint64_t read_u64_le(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

std::uint32_t read_u32_le(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

double read_f64_le(std::istream& in) {
    std::uint64_t bits = read_u64_le(in);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

void write_matrix(std::ostream& out, const Mat& mat) {
    for (Eigen::Index r = 0; r < mat.rows(); ++r)
        for (Eigen::Index c = 0; c < mat.cols(); ++c) write_f64_le(out, mat(r, c));
}

void read_matrix(std::istream& in, Mat& mat) {
    for (Eigen::Index r = 0; r < mat.rows(); ++r)
        for (Eigen::Index c = 0; c < mat.cols(); ++c) mat(r, c) = read_f64_le(in);
}

void write_vector(std::ostream& out, const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) write_f64_le(out, v[i]);
}

void read_vector(std::istream& in, Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = read_f64_le(in);
}

void write_ids(std::ostream& out, const std::vector<std::string>& ids) {
    write_u64_le(out, ids.size());
    for (const auto& id : ids) {
        write_u32_le(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
    }
}

std::vector<std::string> read_ids(std::istream& in, const std::string& path) {
    const std::uint64_t count = read_u64_le(in);
    std::vector<std::string> ids;
    ids.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint32_t len = read_u32_le(in);
        std::string s(len, '\0');
        in.read(s.data(), len);
        if (!in) throw Error(ErrorCategory::Parse, path + ": truncated id table");
        ids.push_back(std::move(s));
    }
    return ids;
}

std::string fmt_g17(double d) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
}

}  // namespace

void save_model(const ModelState& st, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCategory::Io, "cannot write '" + path + "'");

    const Hyperparams& hp = st.hp;
    out << "rme-model v1\n"
        << "m " << st.num_users() << "\n"
        << "n " << st.num_items() << "\n"
        << "k " << st.k() << "\n"
        << "toggles " << (st.toggles.use_lie ? 1 : 0) << " " << (st.toggles.use_die ? 1 : 0) << " "
        << (st.toggles.use_ue ? 1 : 0) << "\n"
        << "hp lambda1=" << fmt_g17(hp.lambda_factor) << " lambda2=" << fmt_g17(hp.lambda_context)
        << " l=" << fmt_g17(hp.l) << " phi=" << fmt_g17(hp.phi)
        << " w_pos=" << fmt_g17(hp.w_pos_item) << " w_neg=" << fmt_g17(hp.w_neg_item)
        << " w_user=" << fmt_g17(hp.w_user) << " s=" << fmt_g17(hp.s)
        << " max_sweeps=" << hp.max_sweeps << " patience=" << hp.patience << "\n"
        << "binary\n";

    write_matrix(out, st.alpha);
    write_matrix(out, st.beta);
    write_matrix(out, st.gamma);
    write_matrix(out, st.delta);
    write_matrix(out, st.theta);
    write_vector(out, st.bias_b);
    write_vector(out, st.bias_c);
    write_vector(out, st.bias_d);
    write_vector(out, st.bias_e);
    write_vector(out, st.bias_f);
    write_vector(out, st.bias_g);
    write_ids(out, st.user_ids);
    write_ids(out, st.item_ids);
    if (!out) throw Error(ErrorCategory::Io, "short write to '" + path + "'");
}

ModelState load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCategory::Io, "cannot open '" + path + "'");

    auto expect_line = [&](const char* what) {
        std::string line;
        if (!std::getline(in, line))
            throw Error(ErrorCategory::Parse, path + ": truncated header (" + what + ")");
        return line;
    };
    if (expect_line("magic") != "rme-model v1")
        throw Error(ErrorCategory::Parse, path + ": not an rme-model v1 file");

    std::int64_t m = -1, n = -1, k = -1;
    int lie = 0, die = 0, ue = 0;
    if (std::sscanf(expect_line("m").c_str(), "m %lld", (long long*)&m) != 1 || m < 0)
        throw Error(ErrorCategory::Parse, path + ": bad m line");
    if (std::sscanf(expect_line("n").c_str(), "n %lld", (long long*)&n) != 1 || n < 0)
        throw Error(ErrorCategory::Parse, path + ": bad n line");
    if (std::sscanf(expect_line("k").c_str(), "k %lld", (long long*)&k) != 1 || k < 1)
        throw Error(ErrorCategory::Parse, path + ": bad k line");
    if (std::sscanf(expect_line("toggles").c_str(), "toggles %d %d %d", &lie, &die, &ue) != 3)
        throw Error(ErrorCategory::Parse, path + ": bad toggles line");

    ModelState st;
    st.toggles = {lie != 0, die != 0, ue != 0};
    Hyperparams hp;
    hp.k = static_cast<std::int32_t>(k);
    {
        const std::string line = expect_line("hp");
        if (std::sscanf(line.c_str(),
                        "hp lambda1=%lg lambda2=%lg l=%lg phi=%lg w_pos=%lg w_neg=%lg "
                        "w_user=%lg s=%lg max_sweeps=%d patience=%d",
                        &hp.lambda_factor, &hp.lambda_context, &hp.l, &hp.phi, &hp.w_pos_item,
                        &hp.w_neg_item, &hp.w_user, &hp.s, &hp.max_sweeps, &hp.patience) != 10)
            throw Error(ErrorCategory::Parse, path + ": bad hp line");
    }
    if (expect_line("binary") != "binary")
        throw Error(ErrorCategory::Parse, path + ": missing binary marker");
    st.hp = hp;

    st.alpha.resize(m, k);
    st.beta.resize(n, k);
    st.gamma.resize(n, k);
    st.delta.resize(n, k);
    st.theta.resize(m, k);
    st.bias_b.resize(n);
    st.bias_c.resize(n);
    st.bias_d.resize(n);
    st.bias_e.resize(n);
    st.bias_f.resize(m);
    st.bias_g.resize(m);
    read_matrix(in, st.alpha);
    read_matrix(in, st.beta);
    read_matrix(in, st.gamma);
    read_matrix(in, st.delta);
    read_matrix(in, st.theta);
    read_vector(in, st.bias_b);
    read_vector(in, st.bias_c);
    read_vector(in, st.bias_d);
    read_vector(in, st.bias_e);
    read_vector(in, st.bias_f);
    read_vector(in, st.bias_g);
    if (!in) throw Error(ErrorCategory::Parse, path + ": truncated factor blocks");
    st.user_ids = read_ids(in, path);
    st.item_ids = read_ids(in, path);
    if (static_cast<std::int64_t>(st.user_ids.size()) != m ||
        static_cast<std::int64_t>(st.item_ids.size()) != n)
        throw Error(ErrorCategory::Parse, path + ": id table sizes disagree with header");
    char extra;
    if (in.read(&extra, 1))
        throw Error(ErrorCategory::Parse, path + ": trailing bytes after model payload");
    return st;
}

}  // namespace rme::model
