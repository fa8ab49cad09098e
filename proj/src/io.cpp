// SPDX-License-Identifier: Apache-2.0

#include "stir/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stir/rng.hpp"

namespace stir {

namespace {

// fixed stream tags so different random objects never share draws
constexpr std::uint64_t kStreamUniformMatrix = 0x756e69666d61ull; // "unifma"
constexpr std::uint64_t kStreamOrthoU = 0x6f7274686f55ull;
constexpr std::uint64_t kStreamOrthoV = 0x6f7274686f56ull;

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

DenseMatrix to_dense(const AnyMatrix& m) {
    if (std::holds_alternative<DenseMatrix>(m)) return std::get<DenseMatrix>(m);
    return std::get<SparseCsr>(m).to_dense();
}

std::size_t matrix_rows(const AnyMatrix& m) {
    return std::holds_alternative<DenseMatrix>(m) ? std::get<DenseMatrix>(m).rows()
                                                  : std::get<SparseCsr>(m).rows();
}

std::size_t matrix_cols(const AnyMatrix& m) {
    return std::holds_alternative<DenseMatrix>(m) ? std::get<DenseMatrix>(m).cols()
                                                  : std::get<SparseCsr>(m).cols();
}

DenseMatrix gen_decay_spd(std::size_t n) {
    if (n < 2) throw std::invalid_argument("gen_decay_spd: n must be >= 2");
    DenseMatrix a(n, n);
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            if (i == j)
                a(i - 1, j - 1) = 1.0 + std::sqrt(static_cast<double>(i));
            else
                a(i - 1, j - 1) = 1.0 / std::abs(static_cast<double>(i) - static_cast<double>(j));
        }
    }
    return a;
}

DenseMatrix gen_uniform_random(std::size_t n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("gen_uniform_random: n must be >= 2");
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::vector<double> row = uniform_vector(seed, kStreamUniformMatrix, i, n);
        for (std::size_t j = 0; j < n; ++j) a(i, j) = row[j];
    }
    return a;
}

std::pair<DenseMatrix, Vector> gen_normal_equations(const DenseMatrix& h, const Vector& y) {
    if (h.rows() != y.size()) throw DimensionMismatch("gen_normal_equations: H rows != y length");
    const std::size_t m = h.rows(), n = h.cols();
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < m; ++r) acc += h(r, i) * h(r, j);
            a(i, j) = acc;
            a(j, i) = acc;
        }
    }
    try {
        if (std::sqrt(cond_estimate(a)) > 1e12)
            throw RankDeficient("gen_normal_equations: H numerically rank deficient");
    } catch (const SingularMatrix&) {
        throw RankDeficient("gen_normal_equations: H numerically rank deficient");
    }
    return {std::move(a), matvec_transpose(h, y)};
}

namespace {

// Orthonormal factor from modified Gram-Schmidt on a seeded Gaussian matrix.
DenseMatrix random_orthogonal(std::size_t n, std::uint64_t seed, std::uint64_t stream) {
    DenseMatrix q(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::vector<double> col = normal_vector(seed, stream, j, n);
        for (std::size_t i = 0; i < n; ++i) q(i, j) = col[i];
    }
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t p = 0; p < j; ++p) {
            double proj = 0.0;
            for (std::size_t i = 0; i < n; ++i) proj += q(i, p) * q(i, j);
            for (std::size_t i = 0; i < n; ++i) q(i, j) -= proj * q(i, p);
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) nrm += q(i, j) * q(i, j);
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < n; ++i) q(i, j) /= nrm;
    }
    return q;
}

} // namespace

DenseMatrix gen_conditioned(std::size_t n, double target_cond, std::uint64_t seed,
                            bool symmetric) {
    if (n < 2) throw std::invalid_argument("gen_conditioned: n must be >= 2");
    if (target_cond < 1.0) throw std::invalid_argument("gen_conditioned: target_cond must be >= 1");
    std::vector<double> sigma(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = (n == 1) ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        sigma[i] = std::pow(target_cond, -t); // log-spaced from 1 to 1/cond
    }
    const DenseMatrix u = random_orthogonal(n, seed, kStreamOrthoU);
    const DenseMatrix v = symmetric ? u : random_orthogonal(n, seed, kStreamOrthoV);
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += u(i, k) * sigma[k] * v(j, k);
            a(i, j) = acc;
        }
    if (symmetric) // enforce exact symmetry against rounding
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) a(j, i) = a(i, j);
    return a;
}

// --- MatrixMarket -----------------------------------------------------------

namespace {

struct MmHeader {
    bool coordinate = true;
    std::string field;    // real | integer | pattern | complex
    std::string symmetry; // general | symmetric | skew-symmetric | hermitian
};

[[noreturn]] void parse_fail(const std::string& origin, std::size_t line, const std::string& msg) {
    throw ParseError(origin + ":" + std::to_string(line) + ": " + msg);
}

} // namespace

AnyMatrix read_matrix_market_string(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(in, line)) parse_fail(origin, 1, "empty file");
    ++lineno;
    std::istringstream hs(line);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") parse_fail(origin, lineno, "missing %%MatrixMarket banner");
    object = lower(object);
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (object != "matrix") parse_fail(origin, lineno, "unsupported object: " + object);
    if (format != "coordinate" && format != "array")
        parse_fail(origin, lineno, "unsupported format: " + format);
    if (field == "complex" || symmetry == "hermitian")
        throw UnsupportedField(origin + ": complex-valued MatrixMarket files are not supported");
    if (field != "real" && field != "integer" && field != "pattern")
        parse_fail(origin, lineno, "unsupported field: " + field);
    if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric")
        parse_fail(origin, lineno, "unsupported symmetry: " + symmetry);

    // skip comments / blank lines
    auto next_data_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++lineno;
            std::size_t pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos) continue;
            if (line[pos] == '%') continue;
            return true;
        }
        return false;
    };

    if (!next_data_line()) parse_fail(origin, lineno, "missing size line");
    std::istringstream ss(line);
    if (format == "coordinate") {
        long long rows = 0, cols = 0, nnz = 0;
        if (!(ss >> rows >> cols >> nnz) || rows <= 0 || cols <= 0 || nnz < 0)
            parse_fail(origin, lineno, "bad coordinate size line");
        std::vector<std::size_t> is, js;
        std::vector<double> vs;
        is.reserve(nnz * 2);
        js.reserve(nnz * 2);
        vs.reserve(nnz * 2);
        for (long long e = 0; e < nnz; ++e) {
            if (!next_data_line()) parse_fail(origin, lineno, "unexpected end of file");
            std::istringstream es(line);
            long long i = 0, j = 0;
            double v = 1.0;
            if (!(es >> i >> j)) parse_fail(origin, lineno, "bad entry line");
            if (field != "pattern" && !(es >> v)) parse_fail(origin, lineno, "missing value");
            if (i < 1 || i > rows || j < 1 || j > cols)
                throw IndexOutOfBounds(origin + ":" + std::to_string(lineno) +
                                       ": index out of bounds");
            is.push_back(static_cast<std::size_t>(i - 1));
            js.push_back(static_cast<std::size_t>(j - 1));
            vs.push_back(v);
            if (i != j && symmetry == "symmetric") {
                is.push_back(static_cast<std::size_t>(j - 1));
                js.push_back(static_cast<std::size_t>(i - 1));
                vs.push_back(v);
            } else if (i != j && symmetry == "skew-symmetric") {
                is.push_back(static_cast<std::size_t>(j - 1));
                js.push_back(static_cast<std::size_t>(i - 1));
                vs.push_back(-v);
            }
        }
        return SparseCsr::from_triplets(static_cast<std::size_t>(rows),
                                        static_cast<std::size_t>(cols), is, js, vs);
    }

    long long rows = 0, cols = 0;
    if (!(ss >> rows >> cols) || rows <= 0 || cols <= 0)
        parse_fail(origin, lineno, "bad array size line");
    DenseMatrix a(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    // column-major; symmetric variants store the lower triangle only
    const bool general = symmetry == "general";
    for (long long j = 0; j < cols; ++j) {
        const long long i0 = general ? 0 : (symmetry == "skew-symmetric" ? j + 1 : j);
        for (long long i = i0; i < rows; ++i) {
            if (!next_data_line()) parse_fail(origin, lineno, "unexpected end of file");
            double v = 0.0;
            std::istringstream es(line);
            if (!(es >> v)) parse_fail(origin, lineno, "bad value line");
            a(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = v;
            if (!general && i != j) {
                const double mirror = symmetry == "symmetric" ? v : -v;
                a(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) = mirror;
            }
        }
    }
    return a;
}

AnyMatrix read_matrix_market(const std::string& path) {
    return read_matrix_market_string(read_file(path), path);
}

std::string matrix_market_string(const DenseMatrix& a) {
    std::string out = "%%MatrixMarket matrix array real general\n";
    out += std::to_string(a.rows()) + " " + std::to_string(a.cols()) + "\n";
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) out += fmt17(a(i, j)) + "\n";
    return out;
}

std::string matrix_market_string(const SparseCsr& a) {
    std::string out = "%%MatrixMarket matrix coordinate real general\n";
    out += std::to_string(a.rows()) + " " + std::to_string(a.cols()) + " " +
           std::to_string(a.nnz()) + "\n";
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p)
            out += std::to_string(i + 1) + " " + std::to_string(a.col_idx()[p] + 1) + " " +
                   fmt17(a.vals()[p]) + "\n";
    return out;
}

void write_matrix_market(const DenseMatrix& a, const std::string& path) {
    write_file_atomic(path, matrix_market_string(a));
}

void write_matrix_market(const SparseCsr& a, const std::string& path) {
    write_file_atomic(path, matrix_market_string(a));
}

namespace {

template <class Matrix>
double max_abs_entry(const Matrix& a);

template <>
double max_abs_entry(const DenseMatrix& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

template <>
double max_abs_entry(const SparseCsr& a) {
    double m = 0.0;
    for (double v : a.vals()) m = std::max(m, std::abs(v));
    return m;
}

} // namespace

std::pair<DenseMatrix, double> normalize_dynamic_range(const DenseMatrix& a, double target_max) {
    const double mx = max_abs_entry(a);
    if (mx == 0.0) throw ZeroMatrix("normalize_dynamic_range: all entries are zero");
    const double gamma = target_max / mx;
    DenseMatrix s = a;
    for (double& v : s.data()) v *= gamma;
    return {std::move(s), gamma};
}

std::pair<SparseCsr, double> normalize_dynamic_range(const SparseCsr& a, double target_max) {
    const double mx = max_abs_entry(a);
    if (mx == 0.0) throw ZeroMatrix("normalize_dynamic_range: all entries are zero");
    const double gamma = target_max / mx;
    std::vector<double> vals = a.vals();
    for (double& v : vals) v *= gamma;
    return {SparseCsr(a.rows(), a.cols(), a.row_ptr(), a.col_idx(), std::move(vals)), gamma};
}

// --- Trace CSV --------------------------------------------------------------

std::string trace_csv_string(const IterTrace& trace) {
    std::string out = "iter,res_norm,err_norm,alpha_or_cnorm,inner_iters,inner_relres,diverged_flag\n";
    for (const IterRecord& r : trace.records) {
        out += std::to_string(r.m) + "," + fmt17(r.res_norm) + ",";
        if (r.err_norm) out += fmt17(*r.err_norm);
        out += "," + fmt17(r.alpha_or_cnorm) + "," + std::to_string(r.inner_iterations) + "," +
               fmt17(r.inner_relres) + "," + (trace.diverged ? "1" : "0") + "\n";
    }
    return out;
}

void write_trace_csv(const IterTrace& trace, const std::string& path) {
    write_file_atomic(path, trace_csv_string(trace));
}

IterTrace read_trace_csv(const std::string& path) {
    const std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty trace file");
    IterTrace trace;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        while (cells.size() < 7) cells.emplace_back();
        IterRecord r;
        r.m = std::stoull(cells[0]);
        r.res_norm = std::stod(cells[1]);
        if (!cells[2].empty()) r.err_norm = std::stod(cells[2]);
        r.alpha_or_cnorm = std::stod(cells[3]);
        r.inner_iterations = std::stoull(cells[4]);
        r.inner_relres = std::stod(cells[5]);
        if (cells[6] == "1") trace.diverged = true;
        trace.records.push_back(std::move(r));
    }
    return trace;
}

// --- Backend / run config ---------------------------------------------------

BackendSpec BackendSpec::parse(const std::string& text) {
    BackendSpec spec;
    if (text == "exact") {
        spec.mode = LinearOperator::Mode::Exact;
        return spec;
    }
    if (text.rfind("rounded:", 0) == 0) {
        spec.mode = LinearOperator::Mode::Rounded;
        try {
            spec.format = FpFormat::from_name(text.substr(8));
        } catch (const std::exception& e) {
            throw ConfigError(std::string("backend: ") + e.what());
        }
        return spec;
    }
    if (text.rfind("noisy:", 0) == 0) {
        spec.mode = LinearOperator::Mode::Noisy;
        try {
            spec.sigma = std::stod(text.substr(6));
        } catch (const std::exception&) {
            throw ConfigError("backend: bad noise level in '" + text + "'");
        }
        if (spec.sigma < 0.0) throw ConfigError("backend: sigma must be >= 0");
        return spec;
    }
    if (text == "noisy") {
        spec.mode = LinearOperator::Mode::Noisy;
        return spec;
    }
    throw ConfigError("backend: unknown backend '" + text + "'");
}

std::string BackendSpec::str() const {
    switch (mode) {
    case LinearOperator::Mode::Exact: return "exact";
    case LinearOperator::Mode::Rounded: return "rounded:" + format.name;
    case LinearOperator::Mode::Noisy: {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", sigma);
        return std::string("noisy:") + buf;
    }
    }
    return "?";
}

LinearOperator BackendSpec::wrap(std::shared_ptr<const DenseMatrix> a, std::uint64_t seed,
                                 std::uint64_t stream) const {
    switch (mode) {
    case LinearOperator::Mode::Exact: return LinearOperator::exact(std::move(a));
    case LinearOperator::Mode::Rounded: return LinearOperator::rounded(std::move(a), format);
    case LinearOperator::Mode::Noisy:
        return LinearOperator::noisy(std::move(a), NoiseModel{sigma, seed, stream});
    }
    throw std::logic_error("unreachable");
}

LinearOperator BackendSpec::wrap(std::shared_ptr<const SparseCsr> a, std::uint64_t seed,
                                 std::uint64_t stream) const {
    switch (mode) {
    case LinearOperator::Mode::Exact: return LinearOperator::exact(std::move(a));
    case LinearOperator::Mode::Rounded: return LinearOperator::rounded(std::move(a), format);
    case LinearOperator::Mode::Noisy:
        return LinearOperator::noisy(std::move(a), NoiseModel{sigma, seed, stream});
    }
    throw std::logic_error("unreachable");
}

RunConfig parse_run_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::size_t eq = line.find('=');
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "variant")
                cfg.refine.variant = variant_from_name(val);
            else if (key == "k")
                cfg.refine.k = std::stoull(val);
            else if (key == "method")
                cfg.refine.basic.method = method_from_name(val);
            else if (key == "inner_tol")
                cfg.refine.basic.inner_tol = std::stod(val);
            else if (key == "max_inner_iters")
                cfg.refine.basic.max_inner_iters = std::stoull(val);
            else if (key == "restart")
                cfg.refine.basic.restart = std::stoull(val);
            else if (key == "lu_format")
                cfg.refine.basic.lu_format = FpFormat::from_name(val);
            else if (key == "outer_tol")
                cfg.refine.outer_tol = std::stod(val);
            else if (key == "max_outer_iters")
                cfg.refine.max_outer_iters = std::stoull(val);
            else if (key == "stagnation_window")
                cfg.refine.stagnation_window = std::stoull(val);
            else if (key == "seed")
                cfg.refine.seed = std::stoull(val);
            else if (key == "residual_precision")
                cfg.refine.residual_precision = FpFormat::from_name(val);
            else if (key == "true_residual_every")
                cfg.refine.true_residual_every = std::stoull(val);
            else if (key == "backend")
                cfg.backend = BackendSpec::parse(val);
            else if (key == "rhs")
                cfg.rhs = val;
            else
                throw ConfigError("unknown key '" + key + "'");
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("key '" + key + "': " + e.what());
        }
    }
    if (cfg.refine.basic.inner_tol <= 0.0 || cfg.refine.basic.inner_tol >= 1.0)
        throw ConfigError("key 'inner_tol': must be in (0, 1)");
    if (cfg.refine.outer_tol <= 0.0 || cfg.refine.outer_tol >= 1.0)
        throw ConfigError("key 'outer_tol': must be in (0, 1)");
    if (cfg.refine.basic.max_inner_iters < 1)
        throw ConfigError("key 'max_inner_iters': must be >= 1");
    if (cfg.refine.basic.restart < 1) throw ConfigError("key 'restart': must be >= 1");
    if (cfg.refine.k < 1) throw ConfigError("key 'k': must be >= 1");
    if (cfg.rhs != "ones" && cfg.rhs != "random")
        throw ConfigError("key 'rhs': must be 'ones' or 'random'");
    return cfg;
}

RunConfig read_run_config(const std::string& path) {
    return parse_run_config_text(read_file(path));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp + " for writing");
        out << content;
        if (!out) throw IoError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("rename failed: " + path);
}

} // namespace stir
