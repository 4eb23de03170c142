// Thin numpy bindings over the core library. Structured results cross the
// boundary as JSON text and are decoded in corrdim/__init__.py.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "corrdim/dimension.hpp"
#include "corrdim/error.hpp"
#include "corrdim/geometry.hpp"
#include "corrdim/lpstream.hpp"
#include "corrdim/report.hpp"
#include "corrdim/textstats.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using IdArray = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;
using TokenArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

corrdim::LogProbStream make_stream(const FloatArray& values, const std::optional<IdArray>& ids,
                                   const std::string& meta_json, bool normalized) {
  if (values.ndim() != 2) throw corrdim::Error(corrdim::ErrorCode::invalid_argument, "values must be 2-D");
  const auto n = static_cast<std::size_t>(values.shape(0));
  const auto d = static_cast<std::size_t>(values.shape(1));
  std::vector<float> buf(values.data(), values.data() + n * d);
  std::optional<std::vector<std::uint32_t>> id_buf;
  if (ids) id_buf.emplace(ids->data(), ids->data() + ids->size());
  const auto meta = corrdim::StreamMeta::from_json(json::parse(meta_json));
  return corrdim::LogProbStream::from_fp32(n, d, std::move(buf), std::move(id_buf), meta, normalized);
}

py::dict stream_to_dict(const corrdim::LogProbStream& s) {
  const auto values = s.to_fp32_values();
  FloatArray arr({s.n_steps(), s.dim()});
  std::memcpy(arr.mutable_data(), values.data(), values.size() * sizeof(float));
  py::dict out;
  out["values"] = arr;
  if (s.has_token_ids()) {
    const auto ids = s.token_ids();
    IdArray id_arr(static_cast<py::ssize_t>(ids.size()));
    std::memcpy(id_arr.mutable_data(), ids.data(), ids.size() * sizeof(std::uint32_t));
    out["token_ids"] = id_arr;
  } else {
    out["token_ids"] = py::none();
  }
  out["meta_json"] = s.meta().to_json().dump();
  out["normalized"] = s.normalized();
  out["fp16"] = s.precision() == corrdim::Precision::fp16;
  return out;
}

std::span<const std::int64_t> token_span(const TokenArray& t) {
  return {t.data(), static_cast<std::size_t>(t.size())};
}

}  // namespace

PYBIND11_MODULE(_corrdim, m) {
  m.doc() = "Correlation dimension of log-probability streams";
  m.attr("__version__") = corrdim::kLibraryVersion;

  static py::exception<corrdim::Error> exc(m, "CorrdimError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const corrdim::Error& e) {
      py::set_error(exc, (std::string(corrdim::to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("read_stream", [](const std::string& path) { return stream_to_dict(corrdim::read_stream_file(path)); },
        py::arg("path"));

  m.def(
      "write_stream",
      [](const std::string& path, const FloatArray& values, std::optional<IdArray> ids,
         const std::string& meta_json, bool normalized, bool fp16) {
        auto s = make_stream(values, ids, meta_json, normalized);
        if (fp16) s = s.to_precision(corrdim::Precision::fp16);
        return corrdim::write_stream_file(s, path);
      },
      py::arg("path"), py::arg("values"), py::arg("token_ids") = py::none(), py::arg("meta_json") = "{}",
      py::arg("normalized") = false, py::arg("fp16") = false);

  m.def(
      "pair_counts",
      [](const FloatArray& values, std::vector<double> eps, std::size_t tile, bool naive) {
        const auto s = make_stream(values, std::nullopt, "{}", false);
        const corrdim::ThresholdGrid grid(std::move(eps));
        py::gil_scoped_release release;
        auto c = naive ? corrdim::count_pairs_naive(s, grid) : corrdim::count_pairs_fused(s, grid, {tile, 0});
        return c.counts;
      },
      py::arg("values"), py::arg("eps"), py::arg("tile") = 512, py::arg("naive") = false);

  m.def(
      "analyze",
      [](const FloatArray& values, double eta, double min_count, std::optional<double> eps_floor,
         std::size_t min_points, std::size_t tau, std::optional<std::size_t> reduce_v,
         const std::string& reduce_space, std::optional<float> clamp_floor) {
        const auto s = make_stream(values, std::nullopt, "{}", false);
        corrdim::AnalyzeOptions opt;
        opt.fit = {eta, min_count, eps_floor, min_points};
        opt.tau = tau;
        opt.reduce_v = reduce_v;
        opt.reduce_space = corrdim::parse_reduce_space(reduce_space);
        opt.clamp_floor = clamp_floor;
        corrdim::AnalysisReport r;
        {
          py::gil_scoped_release release;
          r = corrdim::analyze(s, opt);
        }
        return corrdim::report_to_json(r).dump();
      },
      py::arg("values"), py::arg("eta") = 1.0, py::arg("min_count") = 20.0, py::arg("eps_floor") = py::none(),
      py::arg("min_points") = 8, py::arg("tau") = 1, py::arg("reduce_v") = py::none(),
      py::arg("reduce_space") = "prob", py::arg("clamp_floor") = py::none());

  m.def(
      "fit",
      [](std::vector<double> eps, std::vector<double> s, std::uint64_t n_steps, double eta, double min_count,
         std::optional<double> eps_floor, std::size_t min_points) {
        corrdim::CorrelationIntegral ci{corrdim::ThresholdGrid(std::move(eps)), std::move(s), n_steps};
        return corrdim::fit_to_json(corrdim::fit_dimension(ci, {eta, min_count, eps_floor, min_points})).dump();
      },
      py::arg("eps"), py::arg("s"), py::arg("n_steps"), py::arg("eta") = 1.0, py::arg("min_count") = 20.0,
      py::arg("eps_floor") = py::none(), py::arg("min_points") = 8);

  m.def("tokenize", [](const std::string& text, const std::string& mode) {
    return corrdim::tokenize(text, corrdim::parse_tokenization(mode));
  }, py::arg("text"), py::arg("mode") = "whitespace");
  m.def("rep_n", [](const TokenArray& t, std::size_t n) { return corrdim::rep_n(token_span(t), n); },
        py::arg("tokens"), py::arg("n"));
  m.def("distinct_n", [](const TokenArray& t, std::size_t n) { return corrdim::distinct_n(token_span(t), n); },
        py::arg("tokens"), py::arg("n"));
  m.def("zipf_coefficient",
        [](const TokenArray& t, std::size_t k) { return corrdim::zipf_coefficient(token_span(t), k); },
        py::arg("tokens"), py::arg("top_k") = 1000);
  m.def("heaps_coefficient", [](const TokenArray& t) { return corrdim::heaps_coefficient(token_span(t)); },
        py::arg("tokens"));
}
