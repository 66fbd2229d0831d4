/* Copyright 2026 The crossview Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// File formats: scene, detections, matches, 3D boxes, configuration and
// reports. Schema problems raise CrossviewError(kSchema) with a
// "file:line: message (at /json/pointer)" diagnostic.
//
// Scene file:
//   {"rig": {"cameras": [{id, fx, fy, cx, cy, width, height,
//                         pose: {q: [w,x,y,z], t: [x,y,z]}}],
//            "adjacency": [[a, b], ...]},
//    "frames": [{index, objects: [{uid, class, box: [x,y,z,l,w,h,theta]}],
//                lidar: {inline: [[x,y,z], ...]} | {bin_file: path}}]}
// bin_file paths are relative to the scene file and hold little-endian
// float32 xyz triples.

#ifndef CROSSVIEW_IO_HPP_
#define CROSSVIEW_IO_HPP_

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "crossview/matching.hpp"
#include "crossview/metrics.hpp"
#include "crossview/pipeline.hpp"
#include "crossview/result.hpp"
#include "crossview/scene_model.hpp"

namespace crossview::io {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Diagnostics

/// Schema violation at a JSON pointer; converted to a line diagnostic by the
/// document loaders.
class SchemaViolation : public std::runtime_error {
 public:
  SchemaViolation(std::string pointer, const std::string& what)
      : std::runtime_error(what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

[[noreturn]] inline void fail(const std::string& ptr, const std::string& msg) {
  throw SchemaViolation(ptr, msg);
}

inline std::size_t line_of(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset; ++i) line += text[i] == '\n';
  return line;
}

namespace detail {

/// Finds the byte offset of the value at a JSON pointer in already valid
/// JSON text.
class Locator {
 public:
  explicit Locator(std::string_view s) : s_(s) {}

  std::optional<std::size_t> find(std::string_view pointer) {
    std::vector<std::string> tokens;
    std::size_t p = 0;
    while (p < pointer.size() && pointer[p] == '/') {
      const std::size_t q = pointer.find('/', p + 1);
      std::string tok(pointer.substr(p + 1, q == std::string_view::npos ? q : q - p - 1));
      for (std::size_t k; (k = tok.find("~1")) != std::string::npos;) tok.replace(k, 2, "/");
      for (std::size_t k; (k = tok.find("~0")) != std::string::npos;) tok.replace(k, 2, "~");
      tokens.push_back(std::move(tok));
      if (q == std::string_view::npos) break;
      p = q;
    }
    i_ = 0;
    ws();
    for (const std::string& tok : tokens) {
      if (i_ >= s_.size()) return std::nullopt;
      if (s_[i_] == '{') {
        ++i_;
        bool found = false;
        while (true) {
          ws();
          if (i_ >= s_.size() || s_[i_] == '}') break;
          const std::size_t k0 = i_ + 1;
          skip_string();
          const std::string_view key = s_.substr(k0, i_ - 1 - k0);
          ws();
          ++i_;  // ':'
          ws();
          if (key == tok) {
            found = true;
            break;
          }
          skip_value();
          ws();
          if (i_ < s_.size() && s_[i_] == ',') ++i_;
        }
        if (!found) return std::nullopt;
      } else if (s_[i_] == '[') {
        ++i_;
        std::size_t want = 0;
        try {
          want = std::stoul(tok);
        } catch (const std::exception&) {
          return std::nullopt;
        }
        for (std::size_t k = 0; k < want; ++k) {
          ws();
          if (i_ >= s_.size() || s_[i_] == ']') return std::nullopt;
          skip_value();
          ws();
          if (i_ < s_.size() && s_[i_] == ',') ++i_;
        }
        ws();
        if (i_ >= s_.size() || s_[i_] == ']') return std::nullopt;
      } else {
        return std::nullopt;
      }
    }
    return i_;
  }

 private:
  void ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\n' || s_[i_] == '\r' || s_[i_] == '\t'))
      ++i_;
  }
  void skip_string() {
    ++i_;
    while (i_ < s_.size() && s_[i_] != '"') i_ += s_[i_] == '\\' ? 2 : 1;
    ++i_;
  }
  void skip_value() {
    if (i_ >= s_.size()) return;
    const char c = s_[i_];
    if (c == '"') {
      skip_string();
    } else if (c == '{' || c == '[') {
      int depth = 0;
      while (i_ < s_.size()) {
        const char d = s_[i_];
        if (d == '"') {
          skip_string();
          continue;
        }
        if (d == '{' || d == '[') ++depth;
        if (d == '}' || d == ']') --depth;
        ++i_;
        if (depth == 0) break;
      }
    } else {
      while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != '}' && s_[i_] != ']' &&
             s_[i_] != ' ' && s_[i_] != '\n' && s_[i_] != '\r' && s_[i_] != '\t')
        ++i_;
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

}  // namespace detail

/// A parsed JSON document that remembers its source for diagnostics.
struct Document {
  std::string name;
  std::string text;
  json root;

  /// Runs `fn(root)`, turning schema violations into line diagnostics.
  template <class F>
  auto decode(F&& fn) const -> decltype(fn(root)) {
    try {
      return fn(root);
    } catch (const SchemaViolation& v) {
      std::string where = name;
      if (auto off = detail::Locator(text).find(v.pointer()))
        where += ":" + std::to_string(line_of(text, *off));
      throw CrossviewError(ErrorCode::kSchema, where + ": " + v.what() + " (at " +
                                                   (v.pointer().empty() ? "/" : v.pointer()) +
                                                   ")");
    } catch (const json::exception& e) {
      throw CrossviewError(ErrorCode::kSchema, name + ": " + e.what());
    }
  }
};

inline Document parse_document(std::string text, std::string name = "<input>") {
  Document doc;
  doc.name = std::move(name);
  doc.text = std::move(text);
  try {
    doc.root = json::parse(doc.text);
  } catch (const json::parse_error& e) {
    throw CrossviewError(ErrorCode::kSchema, doc.name + ":" +
                                                 std::to_string(line_of(doc.text, e.byte > 0 ? e.byte - 1 : 0)) +
                                                 ": invalid JSON: " + e.what());
  }
  return doc;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CrossviewError(ErrorCode::kInvalidArgument, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CrossviewError(ErrorCode::kInvalidArgument, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw CrossviewError(ErrorCode::kInvalidArgument, "write failed: " + path.string());
}

inline Document load_document(const fs::path& path) {
  return parse_document(read_text(path), path.string());
}

// ---------------------------------------------------------------------------
// Field readers

inline const json& member(const json& j, const std::string& ptr, const char* key) {
  if (!j.is_object()) fail(ptr, "expected object");
  auto it = j.find(key);
  if (it == j.end()) fail(ptr, std::string("missing key \"") + key + "\"");
  return *it;
}

inline const json* optional_member(const json& j, const std::string& ptr, const char* key) {
  if (!j.is_object()) fail(ptr, "expected object");
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

inline double number(const json& j, const std::string& ptr) {
  if (!j.is_number()) fail(ptr, "expected number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(ptr, "expected finite number");
  return v;
}

inline std::int64_t integer(const json& j, const std::string& ptr) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::floor(v) == v && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
  }
  fail(ptr, "expected integer");
}

inline int int32(const json& j, const std::string& ptr) {
  const std::int64_t v = integer(j, ptr);
  if (v < INT32_MIN || v > INT32_MAX) fail(ptr, "integer out of range");
  return static_cast<int>(v);
}

inline std::string string(const json& j, const std::string& ptr) {
  if (!j.is_string()) fail(ptr, "expected string");
  return j.get<std::string>();
}

inline std::vector<double> numbers(const json& j, const std::string& ptr,
                                   std::optional<std::size_t> size = std::nullopt) {
  if (!j.is_array()) fail(ptr, "expected array");
  if (size && j.size() != *size)
    fail(ptr, "expected " + std::to_string(*size) + " numbers, got " + std::to_string(j.size()));
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], ptr + "/" + std::to_string(i)));
  return out;
}

inline Vec3 vec3(const json& j, const std::string& ptr) {
  const auto v = numbers(j, ptr, 3);
  return {v[0], v[1], v[2]};
}

inline int class_id(const json& j, const std::string& ptr) {
  if (j.is_string()) {
    auto c = class_from_name(j.get<std::string>());
    if (!c || *c == kBackground) fail(ptr, "unknown class \"" + j.get<std::string>() + "\"");
    return *c;
  }
  const int c = int32(j, ptr);
  if (c != kCar && c != kPedestrian && c != kCyclist) fail(ptr, "unknown class id");
  return c;
}

inline std::string class_key(int c) { return std::string(class_name(c)); }

template <class F>
void each_member(const json& j, const std::string& ptr, F&& f) {
  if (!j.is_object()) fail(ptr, "expected object");
  for (const auto& [k, v] : j.items())
    if (!f(k, v, ptr + "/" + k)) fail(ptr + "/" + k, "unknown key \"" + k + "\"");
}

template <class F>
void each_element(const json& j, const std::string& ptr, F&& f) {
  if (!j.is_array()) fail(ptr, "expected array");
  for (std::size_t i = 0; i < j.size(); ++i) f(j[i], ptr + "/" + std::to_string(i), i);
}

// ---------------------------------------------------------------------------
// Boxes

inline json to_json(const Box3D& b) { return json::array({b.x, b.y, b.z, b.l, b.w, b.h, b.theta}); }

inline Box3D box3d_from_json(const json& j, const std::string& ptr) {
  const auto v = numbers(j, ptr, 7);
  Box3D b{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
  if (!b.valid()) fail(ptr, "box dimensions must be positive");
  return b;
}

inline json to_json(const BBox2D& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

inline BBox2D bbox2d_from_json(const json& j, const std::string& ptr) {
  const auto v = numbers(j, ptr, 4);
  BBox2D b{v[0], v[1], v[2], v[3]};
  if (!b.valid()) fail(ptr, "bbox must satisfy x0 <= x1 and y0 <= y1");
  return b;
}

// ---------------------------------------------------------------------------
// Scene

inline json to_json(const CameraRig& rig) {
  json cams = json::array();
  for (const auto& c : rig.cameras) {
    const auto& q = c.pose.rotation;
    const auto& t = c.pose.translation;
    cams.push_back({{"id", c.id},
                    {"fx", c.fx},
                    {"fy", c.fy},
                    {"cx", c.cx},
                    {"cy", c.cy},
                    {"width", c.width},
                    {"height", c.height},
                    {"pose", {{"q", {q.w(), q.x(), q.y(), q.z()}}, {"t", {t.x(), t.y(), t.z()}}}}});
  }
  json adj = json::array();
  for (const auto& [a, b] : rig.adjacency) adj.push_back({a, b});
  return {{"cameras", cams}, {"adjacency", adj}};
}

inline CameraRig rig_from_json(const json& j, const std::string& ptr) {
  CameraRig rig;
  each_element(member(j, ptr, "cameras"), ptr + "/cameras", [&](const json& c, const std::string& p, std::size_t) {
    CameraModel cam;
    cam.id = int32(member(c, p, "id"), p + "/id");
    cam.fx = number(member(c, p, "fx"), p + "/fx");
    cam.fy = number(member(c, p, "fy"), p + "/fy");
    cam.cx = number(member(c, p, "cx"), p + "/cx");
    cam.cy = number(member(c, p, "cy"), p + "/cy");
    cam.width = int32(member(c, p, "width"), p + "/width");
    cam.height = int32(member(c, p, "height"), p + "/height");
    const json& pose = member(c, p, "pose");
    const auto q = numbers(member(pose, p + "/pose", "q"), p + "/pose/q", 4);
    cam.pose.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
    if (!(cam.pose.rotation.norm() > 0.0)) fail(p + "/pose/q", "zero quaternion");
    if (std::abs(cam.pose.rotation.norm() - 1.0) > 1e-6) fail(p + "/pose/q", "quaternion is not unit");
    cam.pose.rotation.normalize();
    cam.pose.translation = vec3(member(pose, p + "/pose", "t"), p + "/pose/t");
    if (auto e = cam.check()) fail(p, e->message);
    if (rig.find(cam.id)) fail(p + "/id", "duplicate camera id");
    rig.cameras.push_back(cam);
  });
  if (const json* adj = optional_member(j, ptr, "adjacency")) {
    each_element(*adj, ptr + "/adjacency", [&](const json& a, const std::string& p, std::size_t) {
      if (!a.is_array() || a.size() != 2) fail(p, "expected [idA, idB]");
      const int x = int32(a[0], p + "/0"), y = int32(a[1], p + "/1");
      if (!rig.find(x) || !rig.find(y)) fail(p, "adjacency references unknown camera");
      if (x == y) fail(p, "self adjacency");
      rig.adjacency.emplace_back(x, y);
    });
  }
  return rig;
}

/// Reads little-endian float32 xyz triples.
inline PointCloud read_lidar_bin(const fs::path& path) {
  const std::string raw = read_text(path);
  if (raw.size() % 12 != 0)
    throw CrossviewError(ErrorCode::kSchema,
                         path.string() + ": size " + std::to_string(raw.size()) +
                             " is not a multiple of 12 bytes");
  PointCloud cloud;
  cloud.points.reserve(raw.size() / 12);
  for (std::size_t off = 0; off < raw.size(); off += 12) {
    float v[3];
    for (int k = 0; k < 3; ++k) {
      std::uint32_t bits;
      std::memcpy(&bits, raw.data() + off + 4 * k, 4);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      std::memcpy(&v[k], &bits, 4);
    }
    cloud.points.emplace_back(v[0], v[1], v[2]);
  }
  return cloud;
}

inline void write_lidar_bin(const fs::path& path, const PointCloud& cloud) {
  std::string raw(cloud.size() * 12, '\0');
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const float f = static_cast<float>(cloud.points[i][k]);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      std::memcpy(raw.data() + i * 12 + 4 * k, &bits, 4);
    }
  }
  write_text(path, raw);
}

inline Scene scene_from_json(const json& j, const fs::path& base_dir) {
  Scene scene;
  scene.rig = rig_from_json(member(j, "", "rig"), "/rig");
  each_element(member(j, "", "frames"), "/frames", [&](const json& f, const std::string& p, std::size_t) {
    Frame frame;
    frame.index = int32(member(f, p, "index"), p + "/index");
    for (const auto& other : scene.frames)
      if (other.index == frame.index) fail(p + "/index", "duplicate frame index");
    if (const json* objs = optional_member(f, p, "objects")) {
      each_element(*objs, p + "/objects", [&](const json& o, const std::string& q, std::size_t) {
        SceneObject obj;
        obj.uid = integer(member(o, q, "uid"), q + "/uid");
        obj.class_id = class_id(member(o, q, "class"), q + "/class");
        obj.box = box3d_from_json(member(o, q, "box"), q + "/box");
        frame.objects.push_back(obj);
      });
    }
    if (const json* lidar = optional_member(f, p, "lidar")) {
      const std::string q = p + "/lidar";
      const json* inl = optional_member(*lidar, q, "inline");
      const json* bin = optional_member(*lidar, q, "bin_file");
      if (inl && bin) fail(q, "give either inline or bin_file, not both");
      if (inl) {
        each_element(*inl, q + "/inline", [&](const json& pt, const std::string& r, std::size_t) {
          frame.lidar.points.push_back(vec3(pt, r));
        });
      } else if (bin) {
        const fs::path file = base_dir / string(*bin, q + "/bin_file");
        if (!fs::exists(file)) fail(q + "/bin_file", "no such file: " + file.string());
        frame.lidar = read_lidar_bin(file);
      } else {
        fail(q, "expected inline or bin_file");
      }
    }
    scene.frames.push_back(std::move(frame));
  });
  return scene;
}

inline Scene load_scene(const fs::path& path) {
  const Document doc = load_document(path);
  return doc.decode([&](const json& j) { return scene_from_json(j, path.parent_path()); });
}

/// Scene JSON with inline LiDAR, or with `bin_dir` side files (relative to
/// the scene file's directory) when given.
inline json scene_to_json(const Scene& scene, const fs::path* scene_dir = nullptr,
                          const std::string& bin_dir = "lidar") {
  json frames = json::array();
  for (const auto& f : scene.frames) {
    json objs = json::array();
    for (const auto& o : f.objects)
      objs.push_back({{"uid", o.uid}, {"class", class_key(o.class_id)}, {"box", to_json(o.box)}});
    json lidar;
    if (scene_dir) {
      char name[64];
      std::snprintf(name, sizeof(name), "frame_%06d.bin", f.index);
      const std::string rel = bin_dir + "/" + name;
      write_lidar_bin(*scene_dir / rel, f.lidar);
      lidar = {{"bin_file", rel}};
    } else {
      json pts = json::array();
      for (const auto& p : f.lidar.points) pts.push_back({p.x(), p.y(), p.z()});
      lidar = {{"inline", pts}};
    }
    frames.push_back({{"index", f.index}, {"objects", objs}, {"lidar", lidar}});
  }
  return {{"rig", to_json(scene.rig)}, {"frames", frames}};
}

// ---------------------------------------------------------------------------
// Detections

inline json to_json(int frame, const Detection2D& d) {
  json j = {{"frame", frame},
            {"camera_id", d.camera_id},
            {"bbox", to_json(d.bbox)},
            {"class", class_key(d.class_id)},
            {"score", d.score}};
  if (d.embedding) j["embedding"] = std::vector<double>(d.embedding->begin(), d.embedding->end());
  if (d.truth_uid) j["truth_uid"] = *d.truth_uid;
  return j;
}

inline json detections_to_json(const DetectionsByFrame& dets) {
  json out = json::array();
  for (const auto& [frame, list] : dets)
    for (const auto& d : list) out.push_back(to_json(frame, d));
  return out;
}

/// Detections grouped by frame, in file order within each frame.
inline DetectionsByFrame detections_from_json(const json& j) {
  DetectionsByFrame out;
  each_element(j, "", [&](const json& d, const std::string& p, std::size_t) {
    Detection2D det;
    const int frame = int32(member(d, p, "frame"), p + "/frame");
    det.camera_id = int32(member(d, p, "camera_id"), p + "/camera_id");
    det.bbox = bbox2d_from_json(member(d, p, "bbox"), p + "/bbox");
    det.class_id = class_id(member(d, p, "class"), p + "/class");
    det.score = number(member(d, p, "score"), p + "/score");
    if (const json* e = optional_member(d, p, "embedding")) {
      const auto v = numbers(*e, p + "/embedding");
      det.embedding = Embedding::Map(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    if (const json* t = optional_member(d, p, "truth_uid")) det.truth_uid = integer(*t, p + "/truth_uid");
    out[frame].push_back(std::move(det));
  });
  return out;
}

inline DetectionsByFrame load_detections(const fs::path& path) {
  return load_document(path).decode([](const json& j) { return detections_from_json(j); });
}

// ---------------------------------------------------------------------------
// Matches

/// Matches per frame; detection indices refer to the frame's detections in
/// file order.
struct MatchesFile {
  std::vector<std::pair<int, int>> adjacency;
  std::map<int, MatchResult> frames;
};

inline json matches_to_json(const MatchesFile& m) {
  json adj = json::array();
  for (const auto& [a, b] : m.adjacency) adj.push_back({a, b});
  json pairs = json::array();
  for (const auto& [frame, r] : m.frames)
    for (const auto& p : r.pairs)
      pairs.push_back({{"frame", frame}, {"a", p.a}, {"b", p.b}, {"distance", p.distance}});
  return {{"adjacency", adj}, {"pairs", pairs}};
}

inline MatchesFile matches_from_json(const json& j) {
  MatchesFile m;
  each_element(member(j, "", "adjacency"), "/adjacency", [&](const json& a, const std::string& p, std::size_t) {
    if (!a.is_array() || a.size() != 2) fail(p, "expected [idA, idB]");
    m.adjacency.emplace_back(int32(a[0], p + "/0"), int32(a[1], p + "/1"));
  });
  each_element(member(j, "", "pairs"), "/pairs", [&](const json& e, const std::string& p, std::size_t) {
    MatchedPair mp;
    const int frame = int32(member(e, p, "frame"), p + "/frame");
    const std::int64_t a = integer(member(e, p, "a"), p + "/a");
    const std::int64_t b = integer(member(e, p, "b"), p + "/b");
    if (a < 0 || b < 0) fail(p, "negative detection index");
    mp.a = static_cast<std::size_t>(a);
    mp.b = static_cast<std::size_t>(b);
    mp.distance = number(member(e, p, "distance"), p + "/distance");
    m.frames[frame].pairs.push_back(mp);
  });
  return m;
}

inline MatchesFile load_matches(const fs::path& path) {
  return load_document(path).decode([](const json& j) { return matches_from_json(j); });
}

// ---------------------------------------------------------------------------
// 3D boxes

inline json predictions_to_json(const std::vector<FrameResult>& frames) {
  json out = json::array();
  for (const auto& fr : frames)
    for (const auto& b : fr.boxes)
      out.push_back({{"frame", b.frame},
                     {"class", class_key(b.class_id)},
                     {"score", b.score},
                     {"box", to_json(b.box)},
                     {"sources", b.sources},
                     {"merged", b.merged}});
  return out;
}

inline std::vector<ScoredBox3D> predictions_from_json(const json& j) {
  std::vector<ScoredBox3D> out;
  each_element(j, "", [&](const json& e, const std::string& p, std::size_t) {
    ScoredBox3D b;
    b.frame = int32(member(e, p, "frame"), p + "/frame");
    b.class_id = class_id(member(e, p, "class"), p + "/class");
    b.score = number(member(e, p, "score"), p + "/score");
    b.box = box3d_from_json(member(e, p, "box"), p + "/box");
    out.push_back(b);
  });
  return out;
}

inline std::vector<ScoredBox3D> load_predictions(const fs::path& path) {
  return load_document(path).decode([](const json& j) { return predictions_from_json(j); });
}

// ---------------------------------------------------------------------------
// Configuration

inline json to_json(const PipelineConfig& c) {
  json priors = json::object();
  for (const auto& [cls, p] : c.estimator.priors) priors[class_key(cls)] = {p.x(), p.y(), p.z()};
  json classes2d = json::array(), classes3d = json::array();
  for (int k : c.eval2d.classes) classes2d.push_back(class_key(k));
  for (int k : c.eval3d.classes) classes3d.push_back(class_key(k));
  const auto& g = c.gen;
  const Vec3& o = c.estimator.sensor_origin;
  return {
      {"loss",
       {{"alpha", c.loss.alpha},
        {"beta", c.loss.beta},
        {"smooth_l1_delta", c.loss.smooth_l1_delta},
        {"foreground_iou", c.loss.foreground_iou}}},
      {"estimator",
       {{"priors", priors},
        {"yaw_mode", c.estimator.yaw_mode == YawMode::kPca ? "pca" : "frustum_axis"},
        {"min_points", c.estimator.min_points},
        {"trim_fraction", c.estimator.trim_fraction},
        {"full_extent_fraction", c.estimator.full_extent_fraction},
        {"sensor_origin", {o.x(), o.y(), o.z()}}}},
      {"gen",
       {{"seed", g.seed},
        {"n_frames", g.n_frames},
        {"min_objects", g.min_objects},
        {"max_objects", g.max_objects},
        {"class_mix",
         {{"car", g.class_mix.car},
          {"pedestrian", g.class_mix.pedestrian},
          {"cyclist", g.class_mix.cyclist}}},
        {"min_radius", g.min_radius},
        {"max_radius", g.max_radius},
        {"overlap_fraction", g.overlap_fraction},
        {"embedding_dim", g.embedding_dim},
        {"embedding_noise", g.embedding_noise},
        {"miss_rate", g.miss_rate},
        {"bbox_jitter_px", g.bbox_jitter_px},
        {"min_lidar_points", g.min_lidar_points},
        {"max_lidar_points", g.max_lidar_points},
        {"clutter_points", g.clutter_points},
        {"sensor_height", g.sensor_height},
        {"dim_jitter", g.dim_jitter},
        {"min_center_spacing", g.min_center_spacing},
        {"min_angular_gap_deg", g.min_angular_gap_deg}}},
      {"rig",
       {{"n_cameras", c.rig.n_cameras},
        {"hfov_deg", c.rig.hfov_deg},
        {"yaw_spacing_deg", c.rig.yaw_spacing_deg},
        {"width", c.rig.width},
        {"height", c.rig.height}}},
      {"eval2d",
       {{"iou_threshold", c.eval2d.iou_threshold},
        {"min_height_px", c.eval2d.min_height_px},
        {"max_truncation", c.eval2d.max_truncation},
        {"difficulty", c.eval2d.difficulty},
        {"classes", classes2d}}},
      {"eval3d",
       {{"center_distance_thresholds", c.eval3d.center_distance_thresholds},
        {"classes", classes3d},
        {"tp_threshold", c.eval3d.tp_threshold},
        {"min_recall", c.eval3d.min_recall},
        {"min_precision", c.eval3d.min_precision}}},
      {"tau", c.tau ? json(*c.tau) : json(nullptr)},
      {"nms_iou", c.nms_iou}};
}

namespace detail {

inline std::vector<int> class_list(const json& j, const std::string& ptr) {
  std::vector<int> out;
  each_element(j, ptr, [&](const json& e, const std::string& p, std::size_t) { out.push_back(class_id(e, p)); });
  return out;
}

}  // namespace detail

/// Overlays the keys present in `j` onto `base`. Unknown keys are errors.
inline PipelineConfig config_from_json(const json& j, PipelineConfig c = {}) {
  auto num = [](double& dst) {
    return [&dst](const json& v, const std::string& p) { dst = number(v, p); };
  };
  auto i32 = [](int& dst) {
    return [&dst](const json& v, const std::string& p) { dst = int32(v, p); };
  };
  using Setter = std::function<void(const json&, const std::string&)>;
  auto section = [](const json& s, const std::string& ptr, const std::map<std::string, Setter>& keys) {
    each_member(s, ptr, [&](const std::string& k, const json& v, const std::string& p) {
      auto it = keys.find(k);
      if (it == keys.end()) return false;
      it->second(v, p);
      return true;
    });
  };

  each_member(j, "", [&](const std::string& k, const json& v, const std::string& p) {
    if (k == "loss") {
      section(v, p, {{"alpha", num(c.loss.alpha)},
                     {"beta", num(c.loss.beta)},
                     {"smooth_l1_delta", num(c.loss.smooth_l1_delta)},
                     {"foreground_iou", num(c.loss.foreground_iou)}});
    } else if (k == "estimator") {
      auto& e = c.estimator;
      section(v, p,
              {{"priors",
                [&](const json& pj, const std::string& pp) {
                  each_member(pj, pp, [&](const std::string& ck, const json& cv, const std::string& cp) {
                    auto cls = class_from_name(ck);
                    if (!cls || *cls == kBackground) return false;
                    e.priors[*cls] = vec3(cv, cp);
                    return true;
                  });
                }},
               {"yaw_mode",
                [&](const json& yj, const std::string& yp) {
                  const std::string m = string(yj, yp);
                  if (m == "pca") e.yaw_mode = YawMode::kPca;
                  else if (m == "frustum_axis") e.yaw_mode = YawMode::kFrustumAxis;
                  else fail(yp, "yaw_mode must be \"pca\" or \"frustum_axis\"");
                }},
               {"min_points",
                [&](const json& mj, const std::string& mp) {
                  const std::int64_t n = integer(mj, mp);
                  if (n < 1) fail(mp, "min_points must be >= 1");
                  e.min_points = static_cast<std::size_t>(n);
                }},
               {"trim_fraction", num(e.trim_fraction)},
               {"full_extent_fraction", num(e.full_extent_fraction)},
               {"sensor_origin", [&](const json& oj, const std::string& op) { e.sensor_origin = vec3(oj, op); }}});
    } else if (k == "gen") {
      auto& g = c.gen;
      section(v, p,
              {{"seed",
                [&](const json& sj, const std::string& sp) {
                  if (!sj.is_number_integer() || (sj.is_number_integer() && !sj.is_number_unsigned() && sj.get<std::int64_t>() < 0))
                    fail(sp, "seed must be a non-negative integer");
                  g.seed = sj.get<std::uint64_t>();
                }},
               {"n_frames", i32(g.n_frames)},
               {"min_objects", i32(g.min_objects)},
               {"max_objects", i32(g.max_objects)},
               {"class_mix",
                [&](const json& mj, const std::string& mp) {
                  section(mj, mp, {{"car", num(g.class_mix.car)},
                                   {"pedestrian", num(g.class_mix.pedestrian)},
                                   {"cyclist", num(g.class_mix.cyclist)}});
                }},
               {"min_radius", num(g.min_radius)},
               {"max_radius", num(g.max_radius)},
               {"overlap_fraction", num(g.overlap_fraction)},
               {"embedding_dim", i32(g.embedding_dim)},
               {"embedding_noise", num(g.embedding_noise)},
               {"miss_rate", num(g.miss_rate)},
               {"bbox_jitter_px", num(g.bbox_jitter_px)},
               {"min_lidar_points", i32(g.min_lidar_points)},
               {"max_lidar_points", i32(g.max_lidar_points)},
               {"clutter_points", i32(g.clutter_points)},
               {"sensor_height", num(g.sensor_height)},
               {"dim_jitter", num(g.dim_jitter)},
               {"min_center_spacing", num(g.min_center_spacing)},
               {"min_angular_gap_deg", num(g.min_angular_gap_deg)}});
    } else if (k == "rig") {
      section(v, p, {{"n_cameras", i32(c.rig.n_cameras)},
                     {"hfov_deg", num(c.rig.hfov_deg)},
                     {"yaw_spacing_deg", num(c.rig.yaw_spacing_deg)},
                     {"width", i32(c.rig.width)},
                     {"height", i32(c.rig.height)}});
    } else if (k == "eval2d") {
      section(v, p, {{"iou_threshold", num(c.eval2d.iou_threshold)},
                     {"min_height_px", num(c.eval2d.min_height_px)},
                     {"max_truncation", num(c.eval2d.max_truncation)},
                     {"difficulty", [&](const json& dj, const std::string& dp) { c.eval2d.difficulty = string(dj, dp); }},
                     {"classes", [&](const json& cj, const std::string& cp) { c.eval2d.classes = detail::class_list(cj, cp); }}});
    } else if (k == "eval3d") {
      section(v, p, {{"center_distance_thresholds",
                      [&](const json& tj, const std::string& tp) { c.eval3d.center_distance_thresholds = numbers(tj, tp); }},
                     {"classes", [&](const json& cj, const std::string& cp) { c.eval3d.classes = detail::class_list(cj, cp); }},
                     {"tp_threshold", num(c.eval3d.tp_threshold)},
                     {"min_recall", num(c.eval3d.min_recall)},
                     {"min_precision", num(c.eval3d.min_precision)}});
    } else if (k == "tau") {
      if (v.is_null()) c.tau.reset();
      else c.tau = number(v, p);
    } else if (k == "nms_iou") {
      c.nms_iou = number(v, p);
    } else {
      return false;
    }
    return true;
  });
  if (auto e = c.check()) fail("", e->message);
  return c;
}

inline PipelineConfig load_config(const fs::path& path, PipelineConfig base = {}) {
  return load_document(path).decode([&](const json& j) { return config_from_json(j, base); });
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const ReidStats& s) {
  return {{"tp", s.tp},         {"tn", s.tn},       {"fp", s.fp},           {"fn", s.fn},
          {"precision", s.precision}, {"recall", s.recall}, {"f_score", s.f_score}};
}

inline ReidStats reid_from_json(const json& j, const std::string& p) {
  ReidStats s;
  s.tp = integer(member(j, p, "tp"), p + "/tp");
  s.tn = integer(member(j, p, "tn"), p + "/tn");
  s.fp = integer(member(j, p, "fp"), p + "/fp");
  s.fn = integer(member(j, p, "fn"), p + "/fn");
  s.precision = number(member(j, p, "precision"), p + "/precision");
  s.recall = number(member(j, p, "recall"), p + "/recall");
  s.f_score = number(member(j, p, "f_score"), p + "/f_score");
  return s;
}

inline json to_json(const TpErrors& e) {
  return {{"ate", e.ate}, {"ase", e.ase}, {"aoe", e.aoe}, {"count", e.count}};
}

inline json to_json(const RegionReport& r) {
  json classes = json::object();
  for (const auto& [c, m] : r.classes)
    classes[class_key(c)] = {{"ap", m.ap},
                             {"ap_per_threshold", m.ap_per_threshold},
                             {"errors", m.errors ? to_json(*m.errors) : json(nullptr)},
                             {"num_gt", m.num_gt},
                             {"num_pred", m.num_pred}};
  return {{"num_gt", r.num_gt}, {"num_pred", r.num_pred}, {"classes", classes}};
}

inline RegionReport region_from_json(const json& j, const std::string& p) {
  RegionReport r;
  auto size = [](const json& v, const std::string& q) {
    const std::int64_t n = integer(v, q);
    if (n < 0) fail(q, "expected non-negative count");
    return static_cast<std::size_t>(n);
  };
  r.num_gt = size(member(j, p, "num_gt"), p + "/num_gt");
  r.num_pred = size(member(j, p, "num_pred"), p + "/num_pred");
  each_member(member(j, p, "classes"), p + "/classes", [&](const std::string& k, const json& m, const std::string& q) {
    auto cls = class_from_name(k);
    if (!cls) return false;
    ClassMetrics3D cm;
    cm.ap = number(member(m, q, "ap"), q + "/ap");
    cm.ap_per_threshold = numbers(member(m, q, "ap_per_threshold"), q + "/ap_per_threshold");
    if (const json* e = optional_member(m, q, "errors")) {
      const std::string ep = q + "/errors";
      cm.errors = TpErrors{number(member(*e, ep, "ate"), ep + "/ate"), number(member(*e, ep, "ase"), ep + "/ase"),
                           number(member(*e, ep, "aoe"), ep + "/aoe"), size(member(*e, ep, "count"), ep + "/count")};
    }
    cm.num_gt = size(member(m, q, "num_gt"), q + "/num_gt");
    cm.num_pred = size(member(m, q, "num_pred"), q + "/num_pred");
    r.classes[*cls] = cm;
    return true;
  });
  return r;
}

inline json to_json(const RunReport& r, bool include_runtime) {
  json ap2d = json::object();
  for (const auto& [c, ap] : r.ap2d) ap2d[class_key(c)] = ap;
  json regions = json::object();
  for (const auto& [reg, rr] : r.regions) regions[std::string(region_name(reg))] = to_json(rr);
  const auto& k = r.counters;
  json j = {{"variant", std::string(variant_name(r.variant))},
            {"ap2d", ap2d},
            {"reid", r.reid ? to_json(*r.reid) : json(nullptr)},
            {"regions", regions},
            {"counters",
             {{"frames", k.frames},
              {"frames_failed", k.frames_failed},
              {"detections", k.detections},
              {"boxes", k.boxes},
              {"merges", k.merges},
              {"merge_rejected", k.merge_rejected},
              {"dropped", k.dropped}}},
            {"frame_errors", r.frame_errors},
            {"config", to_json(r.config)}};
  if (include_runtime && r.runtime_s) j["runtime_s"] = *r.runtime_s;
  return j;
}

inline RunReport report_from_json(const json& j) {
  RunReport r;
  const std::string vname = string(member(j, "", "variant"), "/variant");
  auto v = parse_variant(vname);
  if (!v) fail("/variant", "unknown variant \"" + vname + "\"");
  r.variant = *v;
  each_member(member(j, "", "ap2d"), "/ap2d", [&](const std::string& k, const json& a, const std::string& p) {
    auto c = class_from_name(k);
    if (!c) return false;
    r.ap2d[*c] = number(a, p);
    return true;
  });
  if (const json* s = optional_member(j, "", "reid")) r.reid = reid_from_json(*s, "/reid");
  each_member(member(j, "", "regions"), "/regions", [&](const std::string& k, const json& rj, const std::string& p) {
    if (k == "all") r.regions[Region::kAll] = region_from_json(rj, p);
    else if (k == "overlap") r.regions[Region::kOverlap] = region_from_json(rj, p);
    else return false;
    return true;
  });
  const json& cj = member(j, "", "counters");
  auto cnt = [&](const char* key) {
    const std::int64_t n = integer(member(cj, "/counters", key), std::string("/counters/") + key);
    if (n < 0) fail(std::string("/counters/") + key, "expected non-negative count");
    return static_cast<std::size_t>(n);
  };
  r.counters = {cnt("frames"), cnt("frames_failed"), cnt("detections"), cnt("boxes"),
                cnt("merges"), cnt("merge_rejected"), cnt("dropped")};
  each_element(member(j, "", "frame_errors"), "/frame_errors",
               [&](const json& e, const std::string& p, std::size_t) { r.frame_errors.push_back(string(e, p)); });
  if (const json* t = optional_member(j, "", "runtime_s")) r.runtime_s = number(*t, "/runtime_s");
  const json& config = member(j, "", "config");
  try {
    r.config = config_from_json(config);
  } catch (const SchemaViolation& v) {
    throw SchemaViolation("/config" + v.pointer(), v.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Tables

namespace detail {

inline std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

inline std::string opt_fmt(const std::optional<TpErrors>& e, double TpErrors::*field) {
  return e ? fmt((*e).*field) : "";
}

struct Row {
  std::string variant, region, cls;
  std::optional<double> ap;
  std::optional<TpErrors> errors;
  std::size_t num_gt = 0, num_pred = 0;
};

inline std::vector<Row> rows(const RunReport& r) {
  std::vector<Row> out;
  const std::string v(variant_name(r.variant));
  for (const auto& [c, ap] : r.ap2d) out.push_back({v, "image", class_key(c), ap, std::nullopt, 0, 0});
  for (const auto& [reg, rr] : r.regions)
    for (const auto& [c, m] : rr.classes)
      out.push_back({v, std::string(region_name(reg)), class_key(c), m.ap, m.errors, m.num_gt, m.num_pred});
  return out;
}

}  // namespace detail

/// One CSV row per (region, class); region "image" carries 2D AP.
inline std::string report_csv(const RunReport& r) {
  std::string out = "variant,region,class,ap,ate,ase,aoe,num_gt,num_pred\n";
  for (const auto& row : detail::rows(r)) {
    out += row.variant + "," + row.region + "," + row.cls + "," + (row.ap ? detail::fmt(100.0 * *row.ap, 2) : "") +
           "," + detail::opt_fmt(row.errors, &TpErrors::ate) + "," + detail::opt_fmt(row.errors, &TpErrors::ase) + "," +
           detail::opt_fmt(row.errors, &TpErrors::aoe) + "," + (row.region == "image" ? "" : std::to_string(row.num_gt)) +
           "," + (row.region == "image" ? "" : std::to_string(row.num_pred)) + "\n";
  }
  return out;
}

inline std::string report_text(const RunReport& r) {
  std::ostringstream os;
  os << "variant: " << variant_name(r.variant) << "\n";
  os << "frames: " << r.counters.frames << " (failed " << r.counters.frames_failed << ")"
     << "  detections: " << r.counters.detections << "  boxes: " << r.counters.boxes
     << "  merges: " << r.counters.merges << "  merge_rejected: " << r.counters.merge_rejected
     << "  dropped: " << r.counters.dropped << "\n";
  if (r.reid)
    os << "re-id: tp " << r.reid->tp << " fp " << r.reid->fp << " fn " << r.reid->fn << " tn " << r.reid->tn
       << "  precision " << detail::fmt(r.reid->precision) << " recall " << detail::fmt(r.reid->recall) << " f "
       << detail::fmt(r.reid->f_score) << "\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-8s %-11s %8s %8s %8s %8s %7s %8s\n", "region", "class", "AP", "ATE", "ASE",
                "AOE", "num_gt", "num_pred");
  os << line;
  for (const auto& row : detail::rows(r)) {
    std::snprintf(line, sizeof(line), "%-8s %-11s %8s %8s %8s %8s %7s %8s\n", row.region.c_str(), row.cls.c_str(),
                  row.ap ? detail::fmt(100.0 * *row.ap, 2).c_str() : "-",
                  row.errors ? detail::fmt(row.errors->ate).c_str() : "-",
                  row.errors ? detail::fmt(row.errors->ase).c_str() : "-",
                  row.errors ? detail::fmt(row.errors->aoe).c_str() : "-",
                  row.region == "image" ? "-" : std::to_string(row.num_gt).c_str(),
                  row.region == "image" ? "-" : std::to_string(row.num_pred).c_str());
    os << line;
  }
  for (const auto& e : r.frame_errors) os << "frame error: " << e << "\n";
  return os.str();
}

namespace detail {

inline const ClassMetrics3D* find_metrics(const RunReport& r, Region reg, int cls) {
  auto it = r.regions.find(reg);
  if (it == r.regions.end()) return nullptr;
  auto jt = it->second.classes.find(cls);
  return jt == it->second.classes.end() ? nullptr : &jt->second;
}

}  // namespace detail

/// Side-by-side comparison; deltas are against the first run (Original).
inline std::string comparison_csv(const ComparisonReport& c) {
  std::string out =
      "variant,region,class,ap,ate,ase,aoe,num_gt,num_pred,delta_ap,delta_ate,delta_ase,delta_aoe\n";
  if (c.runs.empty()) return out;
  const RunReport& base = c.runs.front();
  for (const auto& r : c.runs) {
    for (const auto& row : detail::rows(r)) {
      std::string delta = ",,,";
      if (row.region == "image") {
        const int cls = *class_from_name(row.cls);
        auto it = base.ap2d.find(cls);
        if (it != base.ap2d.end()) delta = detail::fmt(100.0 * (*row.ap - it->second), 2) + ",,,";
      } else {
        const Region reg = row.region == "all" ? Region::kAll : Region::kOverlap;
        const auto* b = detail::find_metrics(base, reg, *class_from_name(row.cls));
        if (b) {
          delta = detail::fmt(100.0 * (*row.ap - b->ap), 2);
          if (row.errors && b->errors)
            delta += "," + detail::fmt(row.errors->ate - b->errors->ate) + "," +
                     detail::fmt(row.errors->ase - b->errors->ase) + "," + detail::fmt(row.errors->aoe - b->errors->aoe);
          else
            delta += ",,,";
        }
      }
      out += row.variant + "," + row.region + "," + row.cls + "," + (row.ap ? detail::fmt(100.0 * *row.ap, 2) : "") +
             "," + detail::opt_fmt(row.errors, &TpErrors::ate) + "," + detail::opt_fmt(row.errors, &TpErrors::ase) +
             "," + detail::opt_fmt(row.errors, &TpErrors::aoe) + "," +
             (row.region == "image" ? "" : std::to_string(row.num_gt)) + "," +
             (row.region == "image" ? "" : std::to_string(row.num_pred)) + "," + delta + "\n";
    }
  }
  return out;
}

inline json comparison_to_json(const ComparisonReport& c, bool include_runtime = false) {
  json runs = json::array();
  for (const auto& r : c.runs) runs.push_back(to_json(r, include_runtime));
  json deltas = json::object();
  if (!c.runs.empty()) {
    const RunReport& base = c.runs.front();
    for (const auto& r : c.runs) {
      json per_region = json::object();
      for (const auto& [reg, rr] : r.regions) {
        json per_class = json::object();
        for (const auto& [cls, m] : rr.classes) {
          const auto* b = detail::find_metrics(base, reg, cls);
          if (!b) continue;
          json d = {{"ap", m.ap - b->ap}};
          if (m.errors && b->errors) {
            d["ate"] = m.errors->ate - b->errors->ate;
            d["ase"] = m.errors->ase - b->errors->ase;
            d["aoe"] = m.errors->aoe - b->errors->aoe;
          }
          per_class[class_key(cls)] = d;
        }
        per_region[std::string(region_name(reg))] = per_class;
      }
      deltas[std::string(variant_name(r.variant))] = per_region;
    }
  }
  return {{"baseline", c.runs.empty() ? json(nullptr) : json(std::string(variant_name(c.runs.front().variant)))},
          {"runs", runs},
          {"deltas", deltas}};
}

inline std::string comparison_text(const ComparisonReport& c) {
  std::ostringstream os;
  char line[200];
  for (Region reg : {Region::kAll, Region::kOverlap}) {
    os << "region: " << region_name(reg) << "\n";
    std::snprintf(line, sizeof(line), "%-14s %-11s %8s %8s %8s %8s %8s %6s %6s\n", "variant", "class", "AP", "dAP",
                  "ATE", "ASE", "AOE", "gt", "pred");
    os << line;
    for (const auto& r : c.runs) {
      for (const auto& [cls, m] : r.regions.count(reg) ? r.regions.at(reg).classes : std::map<int, ClassMetrics3D>{}) {
        const auto* b = detail::find_metrics(c.runs.front(), reg, cls);
        std::snprintf(line, sizeof(line), "%-14s %-11s %8s %8s %8s %8s %8s %6zu %6zu\n",
                      std::string(variant_name(r.variant)).c_str(), class_key(cls).c_str(),
                      detail::fmt(100.0 * m.ap, 2).c_str(), b ? detail::fmt(100.0 * (m.ap - b->ap), 2).c_str() : "-",
                      m.errors ? detail::fmt(m.errors->ate).c_str() : "-",
                      m.errors ? detail::fmt(m.errors->ase).c_str() : "-",
                      m.errors ? detail::fmt(m.errors->aoe).c_str() : "-", m.num_gt, m.num_pred);
        os << line;
      }
    }
    os << "\n";
  }
  os << "2D AP (image)\n";
  for (const auto& r : c.runs) {
    os << "  " << variant_name(r.variant) << ":";
    for (const auto& [cls, ap] : r.ap2d) os << " " << class_key(cls) << " " << detail::fmt(100.0 * ap, 2);
    os << "\n";
  }
  os << "re-id\n";
  for (const auto& r : c.runs)
    if (r.reid)
      os << "  " << variant_name(r.variant) << ": precision " << detail::fmt(r.reid->precision) << " recall "
         << detail::fmt(r.reid->recall) << " f " << detail::fmt(r.reid->f_score) << "\n";
  return os.str();
}

}  // namespace crossview::io

#endif  // CROSSVIEW_IO_HPP_
