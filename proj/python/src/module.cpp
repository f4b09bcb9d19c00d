// Copyright 2026 The pifdecode Authors
// SPDX-License-Identifier: Apache-2.0

// Python bindings. Fields cross the boundary as float32 arrays of shape
// (channels, fields, height, width); poses and annotations as (K, 4) arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "pifdecode/decoder.hpp"
#include "pifdecode/encoder.hpp"
#include "pifdecode/error.hpp"
#include "pifdecode/field_file.hpp"
#include "pifdecode/hungarian.hpp"
#include "pifdecode/losses.hpp"
#include "pifdecode/metrics.hpp"
#include "pifdecode/model.hpp"
#include "pifdecode/scene.hpp"
#include "pifdecode/tracker.hpp"

namespace py = pybind11;
using namespace pifdecode;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<float> to_numpy(const FieldTensor& t) {
  const auto s = t.shape();
  py::array_t<float> out({s[0], s[1], s[2], s[3]});
  std::memcpy(out.mutable_data(), t.data().data(), t.data().size() * sizeof(float));
  return out;
}

FieldTensor from_numpy(FloatArray array, FieldKind kind, int stride, std::pair<int, int> image_size,
                       std::int64_t frame) {
  if (array.ndim() != 4) throw ShapeError("field arrays must have shape (channels, fields, height, width)");
  const ImageSize size{image_size.first, image_size.second};
  FieldTensor t(kind, static_cast<int>(array.shape(1)), static_cast<int>(array.shape(2)),
                static_cast<int>(array.shape(3)), stride, size, frame);
  if (t.channels() != array.shape(0)) {
    throw ShapeError("expected " + std::to_string(t.channels()) + " channels for a " + std::string(to_string(kind)) +
                     " field, got " + std::to_string(array.shape(0)));
  }
  std::memcpy(t.data().data(), array.data(), t.data().size() * sizeof(float));
  return t;
}

py::array_t<double> keypoints_array(const Pose& p) {
  py::array_t<double> out({static_cast<py::ssize_t>(p.keypoints.size()), py::ssize_t{4}});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t k = 0; k < p.keypoints.size(); ++k) {
    const auto& kp = p.keypoints[k];
    m(k, 0) = kp.x, m(k, 1) = kp.y, m(k, 2) = kp.score, m(k, 3) = kp.size;
  }
  return out;
}

Pose pose_from_array(DoubleArray array, double score) {
  if (array.ndim() != 2 || array.shape(1) != 4) throw ShapeError("pose keypoints must have shape (K, 4)");
  Pose p;
  p.score = score;
  const auto r = array.unchecked<2>();
  for (py::ssize_t k = 0; k < r.shape(0); ++k) p.keypoints.push_back({r(k, 0), r(k, 1), r(k, 2), r(k, 3)});
  return p;
}

py::array_t<double> annotation_array(const GroundTruthAnnotation& a) {
  py::array_t<double> out({static_cast<py::ssize_t>(a.keypoints.size()), py::ssize_t{4}});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t k = 0; k < a.keypoints.size(); ++k) {
    const auto& kp = a.keypoints[k];
    m(k, 0) = kp.x, m(k, 1) = kp.y, m(k, 2) = static_cast<double>(kp.visibility), m(k, 3) = kp.size;
  }
  return out;
}

py::dict ap_dict(const ApReport& r) {
  py::dict d;
  d["ap"] = r.ap;
  d["ap50"] = r.ap50;
  d["ap75"] = r.ap75;
  d["ap_medium"] = r.ap_medium;
  d["ap_large"] = r.ap_large;
  d["ar"] = r.ar;
  d["num_gt"] = r.num_gt;
  d["num_predictions"] = r.num_predictions;
  return d;
}

}  // namespace

PYBIND11_MODULE(_pifdecode, m) {
  m.doc() = "Composite field decoding, encoding, tracking and evaluation";

  // Errors keep their C++ names; all derive from pifdecode.Error. Later
  // registrations are tried first, so subclasses win over the base.
  const auto& base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<NotFoundError>(m, "NotFoundError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<EncodeOutOfBoundsError>(m, "EncodeOutOfBoundsError", base.ptr());
  py::register_exception<GenerationFailedError>(m, "GenerationFailedError", base.ptr());
  py::register_exception<SequenceError>(m, "SequenceError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<FieldFileError>(m, "FieldFileError", base.ptr());

  // ------------------------------------------------------------------ model

  py::class_<Skeleton>(m, "Skeleton")
      .def_readonly("name", &Skeleton::name)
      .def_readonly("keypoints", &Skeleton::keypoints)
      .def_readonly("sigmas", &Skeleton::sigmas)
      .def_property_readonly("edges",
                             [](const Skeleton& s) {
                               std::vector<std::tuple<int, int, bool>> out;
                               for (const auto& e : s.edges) out.emplace_back(e.source, e.target, e.dense);
                               return out;
                             })
      .def_readonly("temporal_edges", &Skeleton::temporal_edges)
      .def_property_readonly("num_keypoints", &Skeleton::num_keypoints)
      .def_property_readonly("num_edges", &Skeleton::num_edges)
      .def("keypoint_index", &Skeleton::keypoint_index)
      .def("validate", [](const Skeleton& s) { return validate_skeleton(s); })
      .def("to_json", [](const Skeleton& s) { return serialize_skeleton(s); })
      .def_static("from_json", [](const std::string& text) { return parse_skeleton(text); })
      .def("__eq__", [](const Skeleton& a, const Skeleton& b) { return a == b; })
      .def("__repr__", [](const Skeleton& s) { return "<Skeleton " + s.name + ">"; });
  m.def("builtin_skeleton", &builtin_skeleton, py::arg("name"));
  m.def("builtin_skeleton_names", &builtin_skeleton_names);
  m.def("resolve_skeleton", &resolve_skeleton, py::arg("name_or_path"));

  py::class_<Pose>(m, "Pose")
      .def(py::init([](DoubleArray keypoints, double score) { return pose_from_array(keypoints, score); }),
           py::arg("keypoints"), py::arg("score") = 0.0)
      .def_readwrite("score", &Pose::score)
      .def_property_readonly("keypoints", &keypoints_array)
      .def_property_readonly("num_detected", &Pose::num_detected)
      .def("__repr__", [](const Pose& p) {
        return "<Pose score=" + std::to_string(p.score) + " detected=" + std::to_string(p.num_detected()) + ">";
      });

  py::class_<TrackedPose>(m, "TrackedPose")
      .def(py::init([](std::int64_t id, Pose pose) { return TrackedPose{id, std::move(pose)}; }), py::arg("track_id"),
           py::arg("pose"))
      .def_readwrite("track_id", &TrackedPose::track_id)
      .def_readwrite("pose", &TrackedPose::pose);

  py::class_<GroundTruthAnnotation>(m, "Annotation")
      .def_readonly("id", &GroundTruthAnnotation::id)
      .def_property_readonly("keypoints", &annotation_array)
      .def_property_readonly("area", &GroundTruthAnnotation::area);

  py::class_<Scene>(m, "Scene")
      .def_property_readonly("image_size", [](const Scene& s) { return std::pair{s.image_size.width, s.image_size.height}; })
      .def_readonly("frame", &Scene::frame)
      .def_readonly("annotations", &Scene::annotations);

  py::class_<SceneSet>(m, "SceneSet")
      .def_readonly("sequence", &SceneSet::sequence)
      .def_readonly("frames", &SceneSet::frames)
      .def("__len__", [](const SceneSet& s) { return s.frames.size(); })
      .def("to_json", [](const SceneSet& s) { return serialize_scenes(s); })
      .def_static("from_json", [](const std::string& text) { return parse_scenes(text); });

  // ------------------------------------------------------------------ fields

  py::enum_<FieldKind>(m, "FieldKind")
      .value("cif", FieldKind::cif)
      .value("caf", FieldKind::caf)
      .value("tcaf", FieldKind::tcaf)
      .value("mask", FieldKind::mask);

  py::class_<FieldTensor>(m, "Field")
      .def(py::init(&from_numpy), py::arg("array"), py::arg("kind"), py::arg("stride"), py::arg("image_size"),
           py::arg("frame") = 0)
      .def_property_readonly("kind", &FieldTensor::kind)
      .def_property_readonly("shape", &FieldTensor::shape)
      .def_property_readonly("stride", &FieldTensor::stride)
      .def_property_readonly("image_size",
                             [](const FieldTensor& t) { return std::pair{t.image_size().width, t.image_size().height}; })
      .def_property("frame", &FieldTensor::frame, &FieldTensor::set_frame)
      .def("numpy", &to_numpy, "Copy of the values as a float32 array")
      .def("__eq__", [](const FieldTensor& a, const FieldTensor& b) { return a == b; });

  m.def(
      "read_field_file",
      [](const std::string& path) {
        const FieldFile f = read_field_file(path);
        py::dict tensors;
        for (const auto& t : f.tensors) tensors[py::str(t.name)] = t.tensor;
        return py::make_tuple(f.manifest.skeleton, f.manifest.frame, tensors);
      },
      py::arg("path"), "Returns (skeleton name, frame, {name: Field})");
  m.def(
      "write_field_file",
      [](const std::string& path, const std::string& skeleton, const std::vector<std::pair<std::string, FieldTensor>>& tensors) {
        if (tensors.empty()) throw ShapeError("a field file needs at least one tensor");
        FieldFile f;
        f.manifest.skeleton = skeleton;
        f.manifest.stride = tensors.front().second.stride();
        f.manifest.image_size = tensors.front().second.image_size();
        f.manifest.frame = tensors.front().second.frame();
        for (const auto& [name, t] : tensors) f.tensors.push_back({name, t});
        write_field_file(path, f);
      },
      py::arg("path"), py::arg("skeleton"), py::arg("tensors"));

  // ----------------------------------------------------------------- encoder

  py::class_<SceneConfig>(m, "SceneConfig")
      .def(py::init<>())
      .def_property(
          "image_size", [](const SceneConfig& c) { return std::pair{c.image_size.width, c.image_size.height}; },
          [](SceneConfig& c, std::pair<int, int> s) { c.image_size = {s.first, s.second}; })
      .def_readwrite("min_poses", &SceneConfig::min_poses)
      .def_readwrite("max_poses", &SceneConfig::max_poses)
      .def_readwrite("min_height", &SceneConfig::min_height)
      .def_readwrite("max_height", &SceneConfig::max_height)
      .def_readwrite("allow_overlap", &SceneConfig::allow_overlap)
      .def_readwrite("margin", &SceneConfig::margin)
      .def_readwrite("hidden_fraction", &SceneConfig::hidden_fraction)
      .def_readwrite("absent_fraction", &SceneConfig::absent_fraction)
      .def_readwrite("articulation_deg", &SceneConfig::articulation_deg)
      .def_readwrite("frames", &SceneConfig::frames)
      .def_readwrite("min_speed", &SceneConfig::min_speed)
      .def_readwrite("max_speed", &SceneConfig::max_speed)
      .def_readwrite("crossing", &SceneConfig::crossing)
      .def_readwrite("camera_shift", &SceneConfig::camera_shift)
      .def_readwrite("max_attempts", &SceneConfig::max_attempts);
  m.def("generate_scene", &generate_scene, py::arg("seed"), py::arg("config"), py::arg("skeleton"));

  py::class_<EncoderConfig>(m, "EncoderConfig")
      .def(py::init<>())
      .def_readwrite("stride", &EncoderConfig::stride)
      .def_readwrite("window", &EncoderConfig::window)
      .def_readwrite("spread", &EncoderConfig::spread);

  const auto encoded = [](EncodedField e) { return py::make_tuple(std::move(e.field), e.masks.tensor()); };
  m.def(
      "encode_cif", [encoded](const Scene& s, const Skeleton& k, const EncoderConfig& c) { return encoded(encode_cif(s, k, c)); },
      py::arg("scene"), py::arg("skeleton"), py::arg("config") = EncoderConfig{}, "Returns (field, masks)");
  m.def(
      "encode_caf", [encoded](const Scene& s, const Skeleton& k, const EncoderConfig& c) { return encoded(encode_caf(s, k, c)); },
      py::arg("scene"), py::arg("skeleton"), py::arg("config") = EncoderConfig{}, "Returns (field, masks)");
  m.def(
      "encode_tcaf",
      [encoded](const Scene& prev, const Scene& cur, const Skeleton& k, const EncoderConfig& c) {
        return encoded(encode_tcaf(prev, cur, k, c));
      },
      py::arg("previous"), py::arg("current"), py::arg("skeleton"), py::arg("config") = EncoderConfig{},
      "Returns (field, masks)");
  m.def(
      "add_confidence_noise",
      [](FieldTensor field, double sigma, std::uint64_t seed) {
        add_confidence_noise(field, {sigma, seed});
        return field;
      },
      py::arg("field"), py::arg("sigma"), py::arg("seed"), "Returns a noisy copy");

  // ------------------------------------------------------------------ losses

  py::class_<LossConfig>(m, "LossConfig")
      .def(py::init<>())
      .def_readwrite("focal_gamma", &LossConfig::focal_gamma)
      .def_readwrite("b_min", &LossConfig::b_min)
      .def_readwrite("b_sigma", &LossConfig::b_sigma)
      .def_readwrite("bce_clip", &LossConfig::bce_clip)
      .def_readwrite("field_weights", &LossConfig::field_weights);
  m.def("focal_bce", &focal_bce, py::arg("c"), py::arg("c_hat"), py::arg("config") = LossConfig{});
  m.def("focal_bce_grad", &focal_bce_grad, py::arg("c"), py::arg("c_hat"), py::arg("config") = LossConfig{});
  m.def(
      "laplace_localization",
      [](std::pair<double, double> v, std::pair<double, double> vh, double b, const LossConfig& c) {
        return laplace_localization({v.first, v.second}, {vh.first, vh.second}, b, c);
      },
      py::arg("v"), py::arg("v_hat"), py::arg("b_hat"), py::arg("config") = LossConfig{});
  m.def("scale_loss", &scale_loss, py::arg("s"), py::arg("s_hat"), py::arg("config") = LossConfig{});
  m.def(
      "composite_field_loss",
      [](const FieldTensor& pred, const FieldTensor& target, const FieldTensor& masks, const LossConfig& c) {
        const LossBreakdown b = composite_field_loss(pred, target, LossMasks(masks), c);
        py::dict d;
        d["confidence"] = b.confidence;
        d["localization"] = b.localization;
        d["scale"] = b.scale;
        d["total"] = b.total;
        return d;
      },
      py::arg("pred"), py::arg("target"), py::arg("masks"), py::arg("config") = LossConfig{});

  // ----------------------------------------------------------------- decoder

  py::enum_<SeedRescoring>(m, "SeedRescoring")
      .value("hr", SeedRescoring::hr)
      .value("local_3x3_nms", SeedRescoring::local_3x3_nms)
      .value("none", SeedRescoring::none);

  py::class_<NmsConfig>(m, "NmsConfig")
      .def(py::init<>())
      .def_readwrite("r_min", &NmsConfig::r_min)
      .def_readwrite("alpha", &NmsConfig::alpha)
      .def_readwrite("min_keypoints", &NmsConfig::min_keypoints)
      .def_readwrite("instance_threshold", &NmsConfig::instance_threshold);

  py::class_<DecoderConfig>(m, "DecoderConfig")
      .def(py::init<>())
      .def_readwrite("seed_threshold", &DecoderConfig::seed_threshold)
      .def_readwrite("keypoint_threshold", &DecoderConfig::keypoint_threshold)
      .def_readwrite("caf_threshold", &DecoderConfig::caf_threshold)
      .def_readwrite("hr_threshold", &DecoderConfig::hr_threshold)
      .def_readwrite("hr_saturation", &DecoderConfig::hr_saturation)
      .def_readwrite("use_frontier", &DecoderConfig::use_frontier)
      .def_readwrite("use_dense_edges", &DecoderConfig::use_dense_edges)
      .def_readwrite("seed_rescoring", &DecoderConfig::seed_rescoring)
      .def_readwrite("caf_rescoring", &DecoderConfig::caf_rescoring)
      .def_readwrite("blend_top2", &DecoderConfig::blend_top2)
      .def_readwrite("reverse_match", &DecoderConfig::reverse_match)
      .def_readwrite("force_complete", &DecoderConfig::force_complete)
      .def_readwrite("max_poses", &DecoderConfig::max_poses)
      .def_readwrite("nms", &DecoderConfig::nms);

  m.def(
      "decode",
      [](const FieldTensor& cif, const FieldTensor& caf, const Skeleton& skeleton, const DecoderConfig& config) {
        py::gil_scoped_release release;
        return decode_frame(cif, caf, skeleton, config);
      },
      py::arg("cif"), py::arg("caf"), py::arg("skeleton"), py::arg("config") = DecoderConfig{});
  m.def("instance_score", py::overload_cast<const Pose&>(&instance_score), py::arg("pose"));

  // ----------------------------------------------------------------- tracker

  py::enum_<TrackingBaseline>(m, "TrackingBaseline")
      .value("tcaf", TrackingBaseline::tcaf)
      .value("hungarian_euclidean", TrackingBaseline::hungarian_euclidean)
      .value("hungarian_oks", TrackingBaseline::hungarian_oks);

  py::class_<TrackingConfig>(m, "TrackingConfig")
      .def(py::init<>())
      .def_readwrite("decoder", &TrackingConfig::decoder)
      .def_property(
          "soft_nms_decay", [](const TrackingConfig& c) { return c.soft_nms.decay; },
          [](TrackingConfig& c, double d) { c.soft_nms.decay = d; })
      .def_readwrite("baseline", &TrackingConfig::baseline)
      .def_readwrite("match_threshold", &TrackingConfig::match_threshold)
      .def_readwrite("track_timeout", &TrackingConfig::track_timeout);

  py::class_<PoseTracker>(m, "PoseTracker")
      .def(py::init<Skeleton, TrackingConfig>(), py::arg("skeleton"), py::arg("config") = TrackingConfig{})
      .def(
          "step",
          [](PoseTracker& t, const FieldTensor& cif, const FieldTensor& caf, const FieldTensor* tcaf) {
            py::gil_scoped_release release;
            return t.step(cif, caf, tcaf);
          },
          py::arg("cif"), py::arg("caf"), py::arg("tcaf") = nullptr)
      .def_property_readonly("next_track_id", [](const PoseTracker& t) { return t.state().next_track_id; });

  m.def(
      "hungarian_assign",
      [](DoubleArray cost) {
        if (cost.ndim() != 2) throw ShapeError("cost must be a 2-D array");
        const int rows = static_cast<int>(cost.shape(0)), cols = static_cast<int>(cost.shape(1));
        std::vector<double> flat(cost.data(), cost.data() + static_cast<std::size_t>(rows) * cols);
        return hungarian_assign(flat, rows, cols);
      },
      py::arg("cost"), "Column of each row, or -1");

  // ----------------------------------------------------------------- metrics

  m.def("oks", py::overload_cast<const Pose&, const GroundTruthAnnotation&, const Skeleton&>(&oks), py::arg("pose"),
        py::arg("annotation"), py::arg("skeleton"));
  m.def(
      "average_precision",
      [](const std::vector<std::vector<Pose>>& predictions, const std::vector<Scene>& scenes, const Skeleton& skeleton) {
        if (predictions.size() != scenes.size()) throw ShapeError("one prediction list per scene is required");
        std::vector<std::vector<GroundTruthAnnotation>> gts;
        for (const auto& s : scenes) gts.push_back(s.annotations);
        return ap_dict(average_precision(predictions, gts, skeleton));
      },
      py::arg("predictions"), py::arg("scenes"), py::arg("skeleton"));
  m.def(
      "mota",
      [](const std::vector<std::vector<TrackedPose>>& tracked, const std::vector<Scene>& scenes,
         const Skeleton& skeleton, double threshold) {
        if (tracked.size() != scenes.size()) throw ShapeError("one tracked list per frame is required");
        const MotReport r = mota(tracked, scenes, skeleton, threshold);
        py::dict d;
        d["mota"] = r.mota;
        d["motp"] = r.motp;
        d["fp"] = r.fp;
        d["fn"] = r.fn;
        d["idsw"] = r.idsw;
        d["num_gt"] = r.num_gt;
        return d;
      },
      py::arg("tracked"), py::arg("scenes"), py::arg("skeleton"), py::arg("match_threshold") = 0.5);
  m.def("crowd_index", &crowd_index, py::arg("scene"));
}
