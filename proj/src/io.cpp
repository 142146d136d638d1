#include "pothole/io.hpp"

#include "pothole/error.hpp"

#include <json.hpp>

#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pothole::io {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// PFM

namespace {

std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0x0000FF00u) | ((v << 8) & 0x00FF0000u) | (v << 24);
}

struct HeaderReader {
  std::string_view s;
  std::size_t pos = 0;

  void skip_space() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  std::string_view token() {
    skip_space();
    const std::size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    return s.substr(start, pos - start);
  }
};

}  // namespace

DepthMap parse_pfm(std::string_view bytes) {
  HeaderReader r{bytes};
  const auto magic = r.token();
  if (magic != "Pf") throw Error(ErrorCode::BadMagic, "expected grayscale 'Pf' header, got '" + std::string(magic) + "'");
  long w = 0, h = 0;
  const auto tw = r.token();
  const auto th = r.token();
  if (std::from_chars(tw.data(), tw.data() + tw.size(), w).ec != std::errc{} ||
      std::from_chars(th.data(), th.data() + th.size(), h).ec != std::errc{} || w <= 0 || h <= 0) {
    throw Error(ErrorCode::DimensionMismatch, "invalid PFM dimensions");
  }
  const std::string scale_tok(r.token());
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw Error(ErrorCode::DimensionMismatch, "invalid PFM scale '" + scale_tok + "'");
  }
  if (scale == 0.0 || !std::isfinite(scale)) throw Error(ErrorCode::DimensionMismatch, "PFM scale must be non-zero");
  // Exactly one whitespace byte separates the header from the payload.
  if (r.pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[r.pos]))) {
    throw Error(ErrorCode::TruncatedPayload, "PFM header not terminated");
  }
  ++r.pos;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const std::size_t need = n * 4;
  const std::size_t have = bytes.size() - r.pos;
  if (have < need) throw Error(ErrorCode::TruncatedPayload, "PFM payload has " + std::to_string(have) + " of " + std::to_string(need) + " bytes");
  if (have > need) throw Error(ErrorCode::DimensionMismatch, "PFM payload longer than " + std::to_string(w) + "x" + std::to_string(h));

  const bool file_little = scale < 0.0;
  const bool swap = file_little != (std::endian::native == std::endian::little);
  std::vector<float> values(n);
  const char* payload = bytes.data() + r.pos;
  for (long row = 0; row < h; ++row) {
    const long dst_row = h - 1 - row;  // bottom-to-top storage
    for (long col = 0; col < w; ++col) {
      std::uint32_t bits;
      std::memcpy(&bits, payload + (static_cast<std::size_t>(row) * w + col) * 4, 4);
      if (swap) bits = byteswap32(bits);
      values[static_cast<std::size_t>(dst_row) * w + col] = std::bit_cast<float>(bits);
    }
  }
  return DepthMap(static_cast<int>(w), static_cast<int>(h), std::move(values));
}

std::string write_pfm(const DepthMap& depth) {
  std::string out = "Pf\n" + std::to_string(depth.width()) + " " + std::to_string(depth.height()) + "\n-1\n";
  const std::size_t header = out.size();
  out.resize(header + static_cast<std::size_t>(depth.width()) * depth.height() * 4);
  const bool swap = std::endian::native != std::endian::little;
  char* dst = out.data() + header;
  for (int row = 0; row < depth.height(); ++row) {
    const int src_row = depth.height() - 1 - row;
    for (int col = 0; col < depth.width(); ++col) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(depth.raw(col, src_row));
      if (swap) bits = byteswap32(bits);
      std::memcpy(dst, &bits, 4);
      dst += 4;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Detections

std::string format_detection(const Detection& d) {
  json j;
  j["format_version"] = kFormatVersion;
  j["frame"] = d.frame;
  j["class_id"] = d.class_id;
  j["x"] = d.bbox.x;
  j["y"] = d.bbox.y;
  j["w"] = d.bbox.w;
  j["h"] = d.bbox.h;
  j["confidence"] = d.confidence;
  return j.dump();
}

namespace {

void check_version(const json& j) {
  if (j.contains("format_version") && j.at("format_version").get<int>() != kFormatVersion) {
    throw std::runtime_error("unsupported format_version " + j.at("format_version").dump());
  }
}

template <class Fn>
void for_each_line(std::string_view text, Fn fn) {
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const bool blank = line.find_first_not_of(" \t") == std::string_view::npos;
    if (!blank) fn(line_no, line);
    if (end == text.size()) break;
  }
}

}  // namespace

std::map<long, std::vector<Detection>> parse_detections(std::string_view text) {
  std::map<long, std::vector<Detection>> out;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    Detection d;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw std::runtime_error("record is not an object");
      check_version(j);
      d.frame = j.at("frame").get<long>();
      d.class_id = j.at("class_id").get<int>();
      d.bbox = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()};
      d.confidence = j.at("confidence").get<double>();
    } catch (const std::exception& e) {
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": confidence outside [0,1]");
    }
    if (!(d.bbox.w >= 0.0) || !(d.bbox.h >= 0.0) || !std::isfinite(d.bbox.x) || !std::isfinite(d.bbox.y)) {
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": invalid box");
    }
    out[d.frame].push_back(d);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

std::filesystem::path SequenceManifest::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : base_dir / p;
}

void SequenceManifest::validate(bool check_files) const {
  intrinsics.validate();
  for (std::size_t k = 1; k < frames.size(); ++k) {
    if (frames[k].frame <= frames[k - 1].frame) {
      throw Error(ErrorCode::OutOfOrderFrame, "manifest frame indices must be strictly increasing");
    }
  }
  if (!check_files) return;
  auto must_exist = [&](const std::filesystem::path& p) {
    if (!std::filesystem::exists(resolve(p))) throw Error(ErrorCode::Io, "missing file " + resolve(p).string());
  };
  if (detections) must_exist(*detections);
  for (const auto& f : frames) {
    must_exist(f.depth);
    if (f.detections) must_exist(*f.detections);
    if (f.correspondences) must_exist(*f.correspondences);
  }
}

SequenceManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  SequenceManifest m;
  m.base_dir = base_dir;
  try {
    const json j = json::parse(text);
    if (j.at("format_version").get<int>() != kFormatVersion) throw std::runtime_error("unsupported format_version");
    const json& in = j.at("intrinsics");
    m.intrinsics = {in.at("fu").get<double>(), in.at("fv").get<double>(), in.at("pu").get<double>(),
                    in.at("pv").get<double>(), in.at("width").get<int>(), in.at("height").get<int>()};
    m.fps = j.value("fps", 0.0);
    m.dataset = j.value("dataset", std::string{});
    if (j.contains("detections")) m.detections = j.at("detections").get<std::string>();
    for (const json& f : j.at("frames")) {
      ManifestFrame mf;
      mf.frame = f.at("frame").get<long>();
      mf.depth = f.at("depth").get<std::string>();
      if (f.contains("detections")) mf.detections = f.at("detections").get<std::string>();
      if (f.contains("correspondences")) mf.correspondences = f.at("correspondences").get<std::string>();
      if (f.contains("motion")) {
        const auto rows = f.at("motion").get<std::vector<std::vector<double>>>();
        if (rows.size() != 3 || rows[0].size() != 3 || rows[1].size() != 3 || rows[2].size() != 3) {
          throw std::runtime_error("motion must be a 3x3 matrix");
        }
        MotionTransform t;
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 3; ++c) t.m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
        mf.motion = t;
      }
      m.frames.push_back(std::move(mf));
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("manifest: ") + e.what());
  }
  if (!m.detections && std::any_of(m.frames.begin(), m.frames.end(), [](const ManifestFrame& f) { return !f.detections; })) {
    throw Error(ErrorCode::InvalidArgument, "manifest: every frame needs a detections file");
  }
  return m;
}

SequenceManifest load_manifest(const std::filesystem::path& path) {
  SequenceManifest m = parse_manifest(read_file(path), path.parent_path());
  m.validate(true);
  return m;
}

std::string format_manifest(const SequenceManifest& m) {
  json j;
  j["format_version"] = kFormatVersion;
  j["dataset"] = m.dataset;
  j["fps"] = m.fps;
  j["intrinsics"] = {{"fu", m.intrinsics.fu}, {"fv", m.intrinsics.fv}, {"pu", m.intrinsics.pu},
                     {"pv", m.intrinsics.pv}, {"width", m.intrinsics.width}, {"height", m.intrinsics.height}};
  if (m.detections) j["detections"] = m.detections->generic_string();
  json frames = json::array();
  for (const auto& f : m.frames) {
    json jf;
    jf["frame"] = f.frame;
    jf["depth"] = f.depth.generic_string();
    if (f.detections) jf["detections"] = f.detections->generic_string();
    if (f.correspondences) jf["correspondences"] = f.correspondences->generic_string();
    if (f.motion) {
      json rows = json::array();
      for (int r = 0; r < 3; ++r) rows.push_back({f.motion->m(r, 0), f.motion->m(r, 1), f.motion->m(r, 2)});
      jf["motion"] = rows;
    }
    frames.push_back(jf);
  }
  j["frames"] = frames;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Correspondences

std::vector<Correspondence> parse_correspondences(std::string_view text) {
  std::vector<Correspondence> out;
  try {
    const json j = json::parse(text);
    check_version(j);
    for (const json& p : j.at("pairs")) {
      const auto v = p.get<std::vector<double>>();
      if (v.size() != 4) throw std::runtime_error("pair must be [x_prev, y_prev, x_curr, y_curr]");
      out.push_back({{v[0], v[1]}, {v[2], v[3]}});
    }
  } catch (const std::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("correspondences: ") + e.what());
  }
  return out;
}

std::string format_correspondences(const std::vector<Correspondence>& c) {
  json pairs = json::array();
  for (const auto& p : c) pairs.push_back({p.prev.x(), p.prev.y(), p.curr.x(), p.curr.y()});
  json j;
  j["format_version"] = kFormatVersion;
  j["pairs"] = pairs;
  return j.dump() + "\n";
}

}  // namespace pothole::io
