#include "pothole/area_metrics.hpp"
#include "pothole/bench.hpp"
#include "pothole/cdkf.hpp"
#include "pothole/dataset.hpp"
#include "pothole/error.hpp"
#include "pothole/hungarian.hpp"
#include "pothole/io.hpp"
#include "pothole/mbtp.hpp"
#include "pothole/pipeline.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

namespace py = pybind11;
using namespace pothole;

namespace {

using FloatImage = py::array_t<float, py::array::c_style | py::array::forcecast>;

DepthMap to_depth(const FloatImage& a) {
  if (a.ndim() != 2) throw Error(ErrorCode::DimensionMismatch, "depth must be a 2-d array (height, width)");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  std::vector<float> v(a.data(), a.data() + a.size());
  return DepthMap(w, h, std::move(v));
}

FloatImage from_depth(const DepthMap& d) {
  FloatImage out({d.height(), d.width()});
  std::memcpy(out.mutable_data(), d.values().data(), d.values().size_bytes());
  return out;
}

py::dict estimate_to_dict(const AreaEstimate& e) {
  py::dict d;
  d["area_m2"] = e.area_m2;
  d["distance_m"] = e.distance_m;
  d["valid_patch_count"] = e.valid_patch_count;
  d["total_patch_count"] = e.total_patch_count;
  d["valid_patch_fraction"] = e.valid_patch_fraction();
  return d;
}

py::dict report_to_dict(const metrics::AreaConsistencyReport& r) {
  py::dict d;
  d["mae"] = r.mae;
  d["cv"] = r.cv;
  d["afd"] = r.afd;
  d["nis"] = r.has_nis ? py::object(py::float_(r.nis_mean)) : py::object(py::none());
  d["objective_j"] = r.objective();
  d["track_count"] = r.track_count;
  d["excluded_tracks"] = r.excluded_tracks;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pothole area estimation from detections and depth maps";

  static py::exception<Error> error_type(m, "PotholeError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error_type.ptr(), e.what());
    }
  });

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init([](double fu, double fv, double pu, double pv, int width, int height) {
             CameraIntrinsics c{fu, fv, pu, pv, width, height};
             c.validate();
             return c;
           }),
           py::arg("fu"), py::arg("fv"), py::arg("pu"), py::arg("pv"), py::arg("width"), py::arg("height"))
      .def_readonly("fu", &CameraIntrinsics::fu)
      .def_readonly("fv", &CameraIntrinsics::fv)
      .def_readonly("pu", &CameraIntrinsics::pu)
      .def_readonly("pv", &CameraIntrinsics::pv)
      .def_readonly("width", &CameraIntrinsics::width)
      .def_readonly("height", &CameraIntrinsics::height);

  py::class_<BBox>(m, "BBox")
      .def(py::init<double, double, double, double>(), py::arg("x"), py::arg("y"), py::arg("w"), py::arg("h"))
      .def_readwrite("x", &BBox::x)
      .def_readwrite("y", &BBox::y)
      .def_readwrite("w", &BBox::w)
      .def_readwrite("h", &BBox::h)
      .def("__repr__", [](const BBox& b) {
        return "BBox(" + std::to_string(b.x) + ", " + std::to_string(b.y) + ", " + std::to_string(b.w) + ", " +
               std::to_string(b.h) + ")";
      });

  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def("ellipse_factor", [] { return kEllipseFactor; });

  m.def(
      "estimate_area",
      [](const BBox& b, const FloatImage& depth, const CameraIntrinsics& intr, double confidence) {
        return estimate_to_dict(estimate_area(b, to_depth(depth), intr, confidence));
      },
      py::arg("bbox"), py::arg("depth"), py::arg("intrinsics"), py::arg("confidence") = 1.0,
      "Area of the pothole inside `bbox` from a (height, width) depth array in meters.");
  m.def(
      "estimate_area_corner_point",
      [](const BBox& b, const FloatImage& depth, const CameraIntrinsics& intr, double confidence) {
        return estimate_to_dict(estimate_area_corner_point(b, to_depth(depth), intr, confidence));
      },
      py::arg("bbox"), py::arg("depth"), py::arg("intrinsics"), py::arg("confidence") = 1.0);

  py::class_<cdkf::CdkfConfig>(m, "CdkfConfig")
      .def(py::init([](double lambda, double theta, double d0, double q, const std::string& mode) {
             cdkf::CdkfConfig c;
             c.lambda = lambda;
             c.theta = theta;
             c.d0 = d0;
             c.q = q;
             c.mode = cdkf::parse_noise_mode(mode);
             c.validate();
             return c;
           }),
           py::arg("lambda_") = cdkf::CdkfConfig{}.lambda, py::arg("theta") = cdkf::CdkfConfig{}.theta,
           py::arg("d0") = cdkf::CdkfConfig{}.d0, py::arg("q") = cdkf::CdkfConfig{}.q, py::arg("mode") = "combined")
      .def_readonly("lambda_", &cdkf::CdkfConfig::lambda)
      .def_readonly("theta", &cdkf::CdkfConfig::theta)
      .def_readonly("d0", &cdkf::CdkfConfig::d0)
      .def_readonly("q", &cdkf::CdkfConfig::q)
      .def_property_readonly("mode", [](const cdkf::CdkfConfig& c) { return std::string(cdkf::to_string(c.mode)); });

  m.def("measurement_noise", &cdkf::measurement_noise, py::arg("confidence"), py::arg("distance_m"), py::arg("config"));

  py::class_<cdkf::AreaFilter>(m, "AreaFilter")
      .def(py::init<cdkf::CdkfConfig>(), py::arg("config") = cdkf::CdkfConfig{})
      .def(
          "observe",
          [](cdkf::AreaFilter& f, double area, double confidence, double distance, long frame) {
            const auto& s = f.observe(area, confidence, distance, frame);
            return py::make_tuple(s.A, s.P, s.last_nis ? py::object(py::float_(*s.last_nis)) : py::object(py::none()));
          },
          py::arg("area_m2"), py::arg("confidence"), py::arg("distance_m"), py::arg("frame"),
          "Feeds one measurement; returns (area, variance, nis or None).");

  m.def("area_mae", [](const std::vector<double>& s) { return metrics::area_mae(s); }, py::arg("series"));
  m.def("area_cv", [](const std::vector<double>& s) { return metrics::area_cv(s); }, py::arg("series"));
  m.def("area_afd", [](const std::vector<double>& s) { return metrics::area_afd(s); }, py::arg("series"));
  m.def("objective_j", &metrics::objective_j, py::arg("mae"), py::arg("cv"), py::arg("afd"), py::arg("nis"));

  m.def(
      "hungarian",
      [](const Eigen::MatrixXd& cost) {
        const Assignment a = hungarian_solve(cost);
        return py::make_tuple(a.pairs, a.total_cost);
      },
      py::arg("cost"), "Minimum-cost assignment; returns ([(row, col), ...], total_cost).");

  m.def(
      "read_pfm", [](const std::filesystem::path& p) { return from_depth(io::parse_pfm(io::read_file(p))); },
      py::arg("path"));
  m.def(
      "write_pfm",
      [](const std::filesystem::path& p, const FloatImage& depth) { io::write_file(p, io::write_pfm(to_depth(depth))); },
      py::arg("path"), py::arg("depth"));

  m.def(
      "synthesize",
      [](const std::filesystem::path& spec_path, const std::filesystem::path& out_dir) {
        const auto spec = synth::parse_scene_spec(io::read_file(spec_path));
        return synth::write_dataset(spec, out_dir, {});
      },
      py::arg("spec_path"), py::arg("out_dir"), "Renders a synthetic sequence; returns the manifest path.");

  m.def(
      "estimate",
      [](const std::filesystem::path& manifest, bool smoothing, bool parallel, std::uint64_t seed,
         const cdkf::CdkfConfig& cfg) {
        ManifestSource src(io::load_manifest(manifest));
        PipelineConfig pc;
        pc.smoothing = smoothing;
        pc.parallel = parallel;
        pc.seed = seed;
        pc.cdkf = cfg;
        std::string text;
        {
          py::gil_scoped_release release;
          run_pipeline(src, pc, [&](const FrameResultRecord& r) { text += format_record(r) + "\n"; });
        }
        return text;
      },
      py::arg("manifest"), py::arg("smoothing") = true, py::arg("parallel") = false, py::arg("seed") = 0,
      py::arg("config") = cdkf::CdkfConfig{}, "Runs the full pipeline; returns line-delimited JSON result records.");

  m.def(
      "area_report",
      [](const std::string& results_text, long min_track_len, bool smoothed) {
        const auto records = parse_results(results_text);
        return report_to_dict(
            metrics::evaluate_area_consistency(series_from_records(records, smoothed), min_track_len));
      },
      py::arg("results"), py::arg("min_track_len") = 5, py::arg("smoothed") = true,
      "Area consistency metrics of a result-record stream.");

  m.def(
      "bench_mbtp",
      [](int width, int height, int boxes, int iters, double box_size, std::uint64_t seed) {
        const BenchResult r = run_mbtp_bench({width, height, boxes, iters, box_size, seed});
        py::dict d;
        d["mean_ms"] = r.mean_ms;
        d["p95_ms"] = r.p95_ms;
        d["min_ms"] = r.min_ms;
        d["max_ms"] = r.max_ms;
        return d;
      },
      py::arg("width") = 1920, py::arg("height") = 1080, py::arg("boxes") = 5, py::arg("iters") = 100,
      py::arg("box_size") = 200.0, py::arg("seed") = 0);
}
