// SPDX-License-Identifier: Apache-2.0
//
// Python module exposing the main operations: matrix generators,
// floating-point rounding, the line search, the refinement driver, and
// MatrixMarket I/O. Dense matrices cross the boundary as nested lists /
// buffer-compatible sequences to keep the module dependency-free.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stir/experiment.hpp"

namespace py = pybind11;
using namespace stir;

namespace {

DenseMatrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw py::value_error("matrix must have at least one row");
    const std::size_t n = rows.size(), m = rows[0].size();
    DenseMatrix a(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != m) throw py::value_error("ragged matrix rows");
        for (std::size_t j = 0; j < m; ++j) a(i, j) = rows[i][j];
    }
    return a;
}

std::vector<std::vector<double>> rows_from_matrix(const DenseMatrix& a) {
    std::vector<std::vector<double>> rows(a.rows(), std::vector<double>(a.cols()));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) rows[i][j] = a(i, j);
    return rows;
}

py::dict trace_to_dict(const IterTrace& t) {
    py::dict d;
    py::list res_norm, alpha, err_norm;
    for (const IterRecord& r : t.records) {
        res_norm.append(r.res_norm);
        alpha.append(r.alpha_or_cnorm);
        err_norm.append(r.err_norm ? py::object(py::float_(*r.err_norm)) : py::none());
    }
    d["res_norm"] = res_norm;
    d["alpha_or_cnorm"] = alpha;
    d["err_norm"] = err_norm;
    d["converged"] = t.converged;
    d["diverged"] = t.diverged;
    d["stagnated"] = t.stagnated;
    d["final_relres"] = t.final_relres();
    d["warning"] = t.warning;
    return d;
}

py::dict solve(const std::vector<std::vector<double>>& rows, const std::string& config_text) {
    const AnyMatrix a = matrix_from_rows(rows);
    const RunConfig cfg = parse_run_config_text(config_text);
    const SolveOutcome out = run_single(a, cfg);
    py::dict d = trace_to_dict(out.result.trace);
    py::list x;
    for (std::size_t i = 0; i < out.result.x.size(); ++i) x.append(out.result.x[i]);
    d["x"] = x;
    d["exit_code"] = out.exit_code;
    return d;
}

} // namespace

PYBIND11_MODULE(_stir, m) {
    m.doc() = "stable iterative refinement laboratory";

    m.def("gen_decay_spd",
          [](std::size_t n) { return rows_from_matrix(gen_decay_spd(n)); }, py::arg("n"));
    m.def("gen_uniform_random",
          [](std::size_t n, std::uint64_t seed) {
              return rows_from_matrix(gen_uniform_random(n, seed));
          },
          py::arg("n"), py::arg("seed"));
    m.def("gen_conditioned",
          [](std::size_t n, double cond, std::uint64_t seed, bool symmetric) {
              return rows_from_matrix(gen_conditioned(n, cond, seed, symmetric));
          },
          py::arg("n"), py::arg("cond"), py::arg("seed"), py::arg("symmetric") = false);

    m.def("round_to",
          [](double x, const std::string& fmt) { return round_to(x, FpFormat::from_name(fmt)); },
          py::arg("x"), py::arg("format"), "Round to binary64 / binary32 / binary16.");

    m.def("line_search_alpha",
          [](const std::vector<double>& r, const std::vector<double>& w) {
              return line_search_alpha(Vector(r), Vector(w));
          },
          py::arg("r"), py::arg("w"));

    m.def("cond_estimate",
          [](const std::vector<std::vector<double>>& rows) {
              return cond_estimate(matrix_from_rows(rows));
          },
          py::arg("a"));

    m.def("solve", &solve, py::arg("a"), py::arg("config") = std::string(),
          "Run one refinement; config uses the flat key=value grammar.");

    m.def("read_matrix_market",
          [](const std::string& text) {
              return rows_from_matrix(to_dense(read_matrix_market_string(text)));
          },
          py::arg("text"));
    m.def("matrix_market",
          [](const std::vector<std::vector<double>>& rows) {
              return matrix_market_string(matrix_from_rows(rows));
          },
          py::arg("a"));
}
