#include "opennav/scene_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace opennav::io {

using nlohmann::json;

namespace {

[[noreturn]] void load_fail(const fs::path& path, const std::string& what) {
  throw LoadError(path.string() + ": " + what);
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  if (!fs::exists(path)) load_fail(path, "file not found");
  std::ifstream in(path, mode);
  if (!in) load_fail(path, "cannot open for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  return out;
}

void check_written(const std::ofstream& out, const fs::path& path) {
  if (!out) throw Error(path.string() + ": write failed");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Whitespace-separated tokens with '#' comments removed.
std::vector<std::string> read_tokens(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  return tokens;
}

double parse_double(const std::string& tok, const fs::path& path, const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    load_fail(path, "field " + field + ": '" + tok + "' is not a number");
  }
}

int parse_int(const std::string& tok, const fs::path& path, const std::string& field) {
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size() || v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
      throw std::invalid_argument(tok);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    load_fail(path, "field " + field + ": '" + tok + "' is not an integer");
  }
}

bool is_integer_id(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool frame_id_less(const std::string& a, const std::string& b) {
  if (is_integer_id(a) && is_integer_id(b)) {
    const auto strip = [](const std::string& s) {
      const auto nz = s.find_first_not_of('0');
      return nz == std::string::npos ? std::string("0") : s.substr(nz);
    };
    const std::string sa = strip(a), sb = strip(b);
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    if (sa != sb) return sa < sb;
  }
  return a < b;
}

struct IntrinsicsFile {
  CameraIntrinsics intrinsics;
  double depth_scale = kDefaultDepthScale;
};

IntrinsicsFile read_intrinsics(const fs::path& path) {
  const auto t = read_tokens(path);
  if (t.size() != 6 && t.size() != 7)
    load_fail(path, "expected 'fx fy cx cy width height [depth_scale]', got " + std::to_string(t.size()) + " values");
  IntrinsicsFile f;
  f.intrinsics.fx = parse_double(t[0], path, "fx");
  f.intrinsics.fy = parse_double(t[1], path, "fy");
  f.intrinsics.cx = parse_double(t[2], path, "cx");
  f.intrinsics.cy = parse_double(t[3], path, "cy");
  f.intrinsics.width = parse_int(t[4], path, "width");
  f.intrinsics.height = parse_int(t[5], path, "height");
  if (t.size() == 7) f.depth_scale = parse_double(t[6], path, "depth_scale");
  if (!(f.depth_scale > 0.0 && std::isfinite(f.depth_scale)))
    throw ValidationError(path.string() + ": depth_scale must be positive");
  f.intrinsics.validate(path.string());
  return f;
}

void write_intrinsics(const CameraIntrinsics& k, double depth_scale, const fs::path& path) {
  auto out = open_out(path);
  out << "# fx fy cx cy width height depth_scale\n" << std::setprecision(17);
  out << k.fx << ' ' << k.fy << ' ' << k.cx << ' ' << k.cy << ' ' << k.width << ' ' << k.height << ' '
      << depth_scale << '\n';
  check_written(out, path);
}

fs::path mask_path(const fs::path& frames_dir, const std::string& id, std::size_t k) {
  return frames_dir / (id + ".mask." + std::to_string(k) + ".pgm");
}

std::vector<InstanceMask> load_instances(const fs::path& frames_dir, const std::string& id, int width, int height) {
  const auto dets = read_detections(frames_dir / (id + ".detections.txt"));
  std::vector<InstanceMask> out;
  out.reserve(dets.size());
  for (std::size_t k = 0; k < dets.size(); ++k) {
    const fs::path mp = mask_path(frames_dir, id, k);
    InstanceMask m{read_mask_pgm(mp), dets[k]};
    m.validate(width, height, "frame " + id + ": detection " + std::to_string(k) + " (" + mp.filename().string() + ")");
    out.push_back(std::move(m));
  }
  return out;
}

void write_instances(std::span<const InstanceMask> instances, const fs::path& frames_dir, const std::string& id) {
  std::vector<Detection2D> dets;
  for (const auto& m : instances) dets.push_back(m.detection);
  write_detections(dets, frames_dir / (id + ".detections.txt"));
  for (std::size_t k = 0; k < instances.size(); ++k) write_mask_pgm(instances[k].bitmap, mask_path(frames_dir, id, k));
}

// --- PLY ----------------------------------------------------------------

std::size_t ply_type_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "float" || type == "int32" || type == "uint32" || type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  return 0;
}

double ply_read_binary(const char* p, const std::string& type) {
  const auto get = [p]<typename T>(T) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
  };
  if (type == "char" || type == "int8") return get(std::int8_t{});
  if (type == "uchar" || type == "uint8") return get(std::uint8_t{});
  if (type == "short" || type == "int16") return get(std::int16_t{});
  if (type == "ushort" || type == "uint16") return get(std::uint16_t{});
  if (type == "int" || type == "int32") return get(std::int32_t{});
  if (type == "uint" || type == "uint32") return get(std::uint32_t{});
  if (type == "float" || type == "float32") return get(float{});
  return get(double{});
}

}  // namespace

// --- PGM ----------------------------------------------------------------

PgmImage read_pgm(const fs::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  const auto next_token = [&]() {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
      if (c == '#') {
        while ((c = in.get()) != EOF && c != '\n') {
        }
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) load_fail(path, "truncated PGM header");
    return tok;
  };

  const std::string magic = next_token();
  if (magic != "P2" && magic != "P5") load_fail(path, "not a PGM file (magic '" + magic + "')");
  PgmImage img;
  img.width = parse_int(next_token(), path, "width");
  img.height = parse_int(next_token(), path, "height");
  img.maxval = parse_int(next_token(), path, "maxval");
  if (img.width <= 0 || img.height <= 0) load_fail(path, "non-positive PGM dimensions");
  if (img.maxval <= 0 || img.maxval > 65535) load_fail(path, "PGM maxval must lie in [1, 65535]");

  const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  img.pixels.resize(n);
  if (magic == "P5") {
    // next_token consumed exactly one whitespace byte after maxval
    const std::size_t bpp = img.maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(n * bpp);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) load_fail(path, "truncated PGM pixel data");
    for (std::size_t i = 0; i < n; ++i)
      img.pixels[i] = bpp == 2 ? static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]) : raw[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      long v = 0;
      if (!(in >> v)) load_fail(path, "truncated PGM pixel data");
      img.pixels[i] = static_cast<std::uint16_t>(v);
      if (v < 0 || v > img.maxval) load_fail(path, "pixel value exceeds maxval");
    }
  }
  for (auto p : img.pixels)
    if (p > img.maxval) load_fail(path, "pixel value exceeds maxval");
  return img;
}

void write_pgm(const PgmImage& image, const fs::path& path) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << "P5\n" << image.width << ' ' << image.height << '\n' << image.maxval << '\n';
  const bool wide = image.maxval > 255;
  std::vector<unsigned char> raw;
  raw.reserve(image.pixels.size() * (wide ? 2 : 1));
  for (auto p : image.pixels) {
    if (wide) raw.push_back(static_cast<unsigned char>(p >> 8));
    raw.push_back(static_cast<unsigned char>(p & 0xff));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  check_written(out, path);
}

DepthImage read_depth_pgm(const fs::path& path, double depth_scale) {
  const PgmImage img = read_pgm(path);
  DepthImage depth(img.width, img.height, 0.0);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) depth.data()[i] = img.pixels[i] * depth_scale;
  return depth;
}

void write_depth_pgm(const DepthImage& depth, double depth_scale, const fs::path& path) {
  PgmImage img{depth.width(), depth.height(), 65535, {}};
  img.pixels.reserve(depth.size());
  for (double d : depth.data()) {
    const double units = std::round(d / depth_scale);
    img.pixels.push_back(std::isfinite(units) && units > 0.0 && units <= 65535.0 ? static_cast<std::uint16_t>(units)
                                                                                   : 0);
  }
  write_pgm(img, path);
}

Bitmap read_mask_pgm(const fs::path& path) {
  const PgmImage img = read_pgm(path);
  Bitmap mask(img.width, img.height, 0);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const auto p = img.pixels[i];
    if (p != 0 && p != img.maxval) load_fail(path, "mask pixel values must be 0 or maxval");
    mask.data()[i] = p ? 1 : 0;
  }
  return mask;
}

void write_mask_pgm(const Bitmap& mask, const fs::path& path) {
  PgmImage img{mask.width(), mask.height(), 255, {}};
  img.pixels.reserve(mask.size());
  for (auto b : mask.data()) img.pixels.push_back(b ? 255 : 0);
  write_pgm(img, path);
}

// --- poses and detections ------------------------------------------------

CameraPose read_pose(const fs::path& path) {
  const auto t = read_tokens(path);
  if (t.size() != 16) load_fail(path, "expected 16 values (4x4 row-major), got " + std::to_string(t.size()));
  Eigen::Matrix4d m;
  for (int i = 0; i < 16; ++i) m(i / 4, i % 4) = parse_double(t[static_cast<std::size_t>(i)], path, "pose");
  const Eigen::RowVector4d last(0, 0, 0, 1);
  if ((m.row(3) - last).cwiseAbs().maxCoeff() > 1e-9)
    throw ValidationError(path.string() + ": pose last row must be 0 0 0 1");
  return CameraPose::from_matrix(m);
}

void write_pose(const CameraPose& pose, const fs::path& path) {
  auto out = open_out(path);
  out << std::setprecision(17);
  const Eigen::Matrix4d m = pose.matrix();
  for (int r = 0; r < 4; ++r) out << m(r, 0) << ' ' << m(r, 1) << ' ' << m(r, 2) << ' ' << m(r, 3) << '\n';
  check_written(out, path);
}

std::vector<Detection2D> read_detections(const fs::path& path) {
  auto in = open_in(path);
  std::vector<Detection2D> dets;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    std::istringstream ls(body);
    std::string tx1, ty1, tx2, ty2, ts;
    if (!(ls >> tx1 >> ty1 >> tx2 >> ty2 >> ts))
      load_fail(path, "line " + std::to_string(lineno) + ": expected 'x1 y1 x2 y2 score label'");
    const std::string field = "line " + std::to_string(lineno);
    Detection2D d;
    d.x1 = parse_double(tx1, path, field + " x1");
    d.y1 = parse_double(ty1, path, field + " y1");
    d.x2 = parse_double(tx2, path, field + " x2");
    d.y2 = parse_double(ty2, path, field + " y2");
    d.score = parse_double(ts, path, field + " score");
    std::string rest;
    std::getline(ls, rest);
    d.label = trim(rest);
    if (d.label.empty()) load_fail(path, field + ": missing label");
    dets.push_back(std::move(d));
  }
  return dets;
}

void write_detections(std::span<const Detection2D> detections, const fs::path& path) {
  auto out = open_out(path);
  out << "# x1 y1 x2 y2 score label\n" << std::setprecision(17);
  for (const auto& d : detections)
    out << d.x1 << ' ' << d.y1 << ' ' << d.x2 << ' ' << d.y2 << ' ' << d.score << ' ' << d.label << '\n';
  check_written(out, path);
}

// --- scenes ---------------------------------------------------------------

Scene load_scene(const fs::path& scene_dir) {
  if (!fs::is_directory(scene_dir)) load_fail(scene_dir, "scene directory not found");
  const IntrinsicsFile intr = read_intrinsics(scene_dir / "intrinsics.txt");

  const fs::path frames_dir = scene_dir / "frames";
  if (!fs::is_directory(frames_dir)) load_fail(frames_dir, "frames directory not found");
  const std::string depth_suffix = ".depth.pgm";
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(frames_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > depth_suffix.size() && name.ends_with(depth_suffix))
      ids.push_back(name.substr(0, name.size() - depth_suffix.size()));
  }
  std::sort(ids.begin(), ids.end(), frame_id_less);

  Scene scene;
  scene.depth_scale = intr.depth_scale;
  const fs::path gt_dir = scene_dir / "gt";
  const fs::path gt_frames = gt_dir / "frames";
  for (const auto& id : ids) {
    FrameData fd;
    fd.frame.frame_id = id;
    fd.frame.intrinsics = intr.intrinsics;
    fd.frame.depth = read_depth_pgm(frames_dir / (id + depth_suffix), intr.depth_scale);
    fd.frame.pose = read_pose(frames_dir / (id + ".pose.txt"));
    fd.frame.validate();
    const int w = intr.intrinsics.width, h = intr.intrinsics.height;
    fd.instances = load_instances(frames_dir, id, w, h);
    if (fs::exists(gt_frames / (id + ".detections.txt"))) fd.gt_instances = load_instances(gt_frames, id, w, h);
    scene.frames.push_back(std::move(fd));
  }
  if (fs::exists(gt_dir / "instances.json")) scene.ground_truth = load_ground_truth(gt_dir);
  return scene;
}

void write_scene(const Scene& scene, const fs::path& scene_dir) {
  if (scene.frames.empty()) throw Error("write_scene: scene has no frames");
  const fs::path frames_dir = scene_dir / "frames";
  fs::create_directories(frames_dir);
  write_intrinsics(scene.intrinsics(), scene.depth_scale, scene_dir / "intrinsics.txt");
  const bool gt_mirror = std::any_of(scene.frames.begin(), scene.frames.end(),
                                     [](const FrameData& f) { return !f.gt_instances.empty(); });
  const fs::path gt_frames = scene_dir / "gt" / "frames";
  if (gt_mirror) fs::create_directories(gt_frames);
  for (const auto& fd : scene.frames) {
    const std::string& id = fd.frame.frame_id;
    write_depth_pgm(fd.frame.depth, scene.depth_scale, frames_dir / (id + ".depth.pgm"));
    write_pose(fd.frame.pose, frames_dir / (id + ".pose.txt"));
    write_instances(fd.instances, frames_dir, id);
    if (gt_mirror) write_instances(fd.gt_instances, gt_frames, id);
  }
  if (scene.ground_truth) write_ground_truth(*scene.ground_truth, scene_dir / "gt");
}

// --- point clouds -----------------------------------------------------------

void write_points_ply(std::span<const Eigen::Vector3d> points, const fs::path& path) {
  auto out = open_out(path);
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  out << std::setprecision(9);
  for (const auto& p : points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  check_written(out, path);
}

void write_cloud_ply(const ObjectCloud& cloud, const fs::path& path) {
  if (cloud.points.empty()) throw Error("write_cloud_ply: refusing to write empty cloud '" + cloud.label + "'");
  write_points_ply(cloud.points, path);
}

std::vector<Eigen::Vector3d> read_points_ply(const fs::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "ply") load_fail(path, "missing 'ply' magic");

  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<std::pair<std::string, std::string>> props;  // (type, name); list props unsupported
  };
  std::vector<Element> elements;
  std::string format;
  while (std::getline(in, line)) {
    std::istringstream ls(trim(line));
    std::string kw;
    ls >> kw;
    if (kw == "end_header") break;
    if (kw == "format") {
      ls >> format;
    } else if (kw == "element") {
      Element e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (kw == "property") {
      if (elements.empty()) load_fail(path, "property before element");
      std::string type, name;
      ls >> type >> name;
      if (type == "list") {
        if (elements.back().name == "vertex") load_fail(path, "list properties on vertices are not supported");
      }
      elements.back().props.emplace_back(type, name);
    } else if (kw != "comment" && kw != "obj_info" && !kw.empty()) {
      load_fail(path, "unexpected header line '" + trim(line) + "'");
    }
  }
  if (format != "ascii" && format != "binary_little_endian") load_fail(path, "unsupported PLY format '" + format + "'");

  std::vector<Eigen::Vector3d> points;
  for (const auto& e : elements) {
    if (e.name != "vertex") {
      if (points.empty()) load_fail(path, "elements before 'vertex' are not supported");
      break;
    }
    int ix = -1, iy = -1, iz = -1;
    for (std::size_t i = 0; i < e.props.size(); ++i) {
      if (e.props[i].second == "x") ix = static_cast<int>(i);
      if (e.props[i].second == "y") iy = static_cast<int>(i);
      if (e.props[i].second == "z") iz = static_cast<int>(i);
    }
    if (ix < 0 || iy < 0 || iz < 0) load_fail(path, "vertex element lacks x/y/z");
    points.reserve(e.count);
    std::vector<double> vals(e.props.size());
    if (format == "ascii") {
      for (std::size_t k = 0; k < e.count; ++k) {
        for (auto& v : vals)
          if (!(in >> v)) load_fail(path, "truncated vertex data at vertex " + std::to_string(k));
        points.emplace_back(vals[ix], vals[iy], vals[iz]);
      }
    } else {
      std::size_t stride = 0;
      for (const auto& [type, name] : e.props) {
        const std::size_t s = ply_type_size(type);
        if (s == 0) load_fail(path, "unsupported property type '" + type + "'");
        stride += s;
      }
      std::vector<char> buf(stride);
      for (std::size_t k = 0; k < e.count; ++k) {
        if (!in.read(buf.data(), static_cast<std::streamsize>(stride)))
          load_fail(path, "truncated vertex data at vertex " + std::to_string(k));
        std::size_t off = 0;
        for (std::size_t i = 0; i < e.props.size(); ++i) {
          vals[i] = ply_read_binary(buf.data() + off, e.props[i].first);
          off += ply_type_size(e.props[i].first);
        }
        points.emplace_back(vals[ix], vals[iy], vals[iz]);
      }
    }
  }
  return points;
}

// --- boxes --------------------------------------------------------------------

void write_boxes(const SceneInstances& instances, const fs::path& path, std::span<const std::string> cloud_files) {
  json doc = json::array();
  for (std::size_t i = 0; i < instances.instances.size(); ++i) {
    const auto& inst = instances.instances[i];
    const auto& b = inst.box;
    json rec;
    rec["label"] = inst.label();
    rec["score"] = inst.score();
    rec["min"] = {b.min_corner.x(), b.min_corner.y(), b.min_corner.z()};
    rec["max"] = {b.max_corner.x(), b.max_corner.y(), b.max_corner.z()};
    rec["point_count"] = inst.cloud.points.size();
    if (i < cloud_files.size() && !cloud_files[i].empty()) rec["cloud"] = cloud_files[i];
    rec["source_frames"] = std::vector<std::string>(inst.cloud.source_frames.begin(), inst.cloud.source_frames.end());
    doc.push_back(std::move(rec));
  }
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  check_written(out, path);
}

std::vector<BoxRecord> read_boxes(const fs::path& path) {
  auto in = open_in(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    load_fail(path, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) load_fail(path, "expected a JSON array of box records");
  std::vector<BoxRecord> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& rec = doc[i];
    try {
      BoxRecord r;
      r.label = rec.at("label").get<std::string>();
      r.score = rec.at("score").get<double>();
      const auto mn = rec.at("min").get<std::vector<double>>();
      const auto mx = rec.at("max").get<std::vector<double>>();
      if (mn.size() != 3 || mx.size() != 3) load_fail(path, "record " + std::to_string(i) + ": corners need 3 values");
      r.box.min_corner = Eigen::Vector3d(mn[0], mn[1], mn[2]);
      r.box.max_corner = Eigen::Vector3d(mx[0], mx[1], mx[2]);
      r.point_count = rec.at("point_count").get<std::size_t>();
      if (rec.contains("cloud")) r.cloud_file = rec["cloud"].get<std::string>();
      if (rec.contains("source_frames")) r.source_frames = rec["source_frames"].get<std::vector<std::string>>();
      if (!r.box.valid())
        throw ValidationError(path.string() + ": record " + std::to_string(i) + ": min corner exceeds max corner");
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      load_fail(path, "record " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

void write_predictions(const SceneInstances& instances, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<std::string> files;
  for (std::size_t i = 0; i < instances.instances.size(); ++i) {
    std::ostringstream name;
    name << "instance_" << std::setw(3) << std::setfill('0') << i << ".ply";
    files.push_back(name.str());
    write_cloud_ply(instances.instances[i].cloud, dir / files.back());
  }
  write_boxes(instances, dir / "boxes.json", files);
}

SceneInstances load_predictions(const fs::path& dir) {
  const fs::path doc = dir / "boxes.json";
  SceneInstances out;
  for (const auto& rec : read_boxes(doc)) {
    Instance inst;
    inst.cloud.label = rec.label;
    inst.cloud.score = rec.score;
    inst.cloud.source_frames.insert(rec.source_frames.begin(), rec.source_frames.end());
    inst.box = rec.box;
    if (!rec.cloud_file.empty()) {
      inst.cloud.points = read_points_ply(dir / rec.cloud_file);
      if (inst.cloud.points.size() != rec.point_count)
        throw ValidationError(doc.string() + ": point_count of '" + rec.cloud_file + "' disagrees with the PLY");
    }
    out.instances.push_back(std::move(inst));
  }
  return out;
}

// --- ground truth -----------------------------------------------------------

GroundTruth load_ground_truth(const fs::path& gt_dir) {
  const fs::path path = gt_dir / "instances.json";
  auto in = open_in(path);
  GroundTruth gt;
  try {
    const json doc = json::parse(in);
    if (doc.contains("vocabulary")) gt.vocabulary = doc["vocabulary"].get<std::vector<std::string>>();
    for (const auto& rec : doc.at("instances")) {
      GroundTruthInstance g;
      g.label = rec.at("label").get<std::string>();
      g.points = read_points_ply(gt_dir / rec.at("points").get<std::string>());
      if (g.points.empty()) throw ValidationError(path.string() + ": GT instance '" + g.label + "' has no points");
      gt.instances.push_back(std::move(g));
    }
  } catch (const json::exception& e) {
    load_fail(path, e.what());
  }
  if (gt.vocabulary.empty()) {
    for (const auto& g : gt.instances)
      if (std::find(gt.vocabulary.begin(), gt.vocabulary.end(), g.label) == gt.vocabulary.end())
        gt.vocabulary.push_back(g.label);
  }
  for (const auto& g : gt.instances)
    if (std::find(gt.vocabulary.begin(), gt.vocabulary.end(), g.label) == gt.vocabulary.end())
      throw ValidationError(path.string() + ": GT label '" + g.label + "' is not in the vocabulary");
  return gt;
}

void write_ground_truth(const GroundTruth& gt, const fs::path& gt_dir) {
  fs::create_directories(gt_dir);
  json doc;
  doc["vocabulary"] = gt.vocabulary;
  doc["instances"] = json::array();
  for (std::size_t i = 0; i < gt.instances.size(); ++i) {
    std::ostringstream name;
    name << "instance_" << std::setw(3) << std::setfill('0') << i << ".ply";
    write_points_ply(gt.instances[i].points, gt_dir / name.str());
    doc["instances"].push_back({{"label", gt.instances[i].label}, {"points", name.str()}});
  }
  const fs::path path = gt_dir / "instances.json";
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  check_written(out, path);
}

}  // namespace opennav::io
