#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

#include "json.hpp"
#include "rampcast/error.hpp"
#include "rampcast/ingest.hpp"

namespace rampcast::ingest {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "frame codec assumes a little-endian host");

namespace {

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  return std::uint32_t(::crc32(0L, bytes.data(), uInt(bytes.size())));
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::MissingFrame, "cannot open frame " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

json manifest_to_json(const ArchiveManifest& m) {
  json j;
  j["lat0"] = m.geometry.lat0;
  j["lon0"] = m.geometry.lon0;
  j["dlat"] = m.geometry.dlat;
  j["dlon"] = m.geometry.dlon;
  j["nrows"] = m.geometry.nrows;
  j["ncols"] = m.geometry.ncols;
  j["kind"] = to_string(m.kind);
  j["units"] = m.kind == FieldKind::SSI ? "W m-2" : "1";
  j["cadence_minutes"] = m.cadence_minutes;
  j["fill"] = "NaN";
  j["dtype"] = "float32";
  j["byte_order"] = "little";
  json frames = json::array();
  for (std::size_t i = 0; i < m.frames.size(); ++i) {
    json f;
    f["time"] = format_iso8601(m.frames[i]);
    if (i < m.crc32.size()) f["crc32"] = m.crc32[i];
    frames.push_back(std::move(f));
  }
  j["frames"] = std::move(frames);
  return j;
}

}  // namespace

std::uint32_t frame_crc32(std::span<const std::uint8_t> bytes) { return crc32_of(bytes); }

fs::path frame_path(const fs::path& root, Instant t) {
  return root / "frames" / (format_iso8601(t) + ".f32");
}

ArchiveManifest read_manifest(const fs::path& root) {
  const auto path = root / "manifest.json";
  std::ifstream in(path);
  if (!in) fail(Errc::MissingInput, "missing archive manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(Errc::ParseError, "manifest " + path.string() + ": " + e.what());
  }
  ArchiveManifest m;
  try {
    m.geometry.lat0 = j.at("lat0").get<double>();
    m.geometry.lon0 = j.at("lon0").get<double>();
    m.geometry.dlat = j.at("dlat").get<double>();
    m.geometry.dlon = j.at("dlon").get<double>();
    m.geometry.nrows = j.at("nrows").get<std::size_t>();
    m.geometry.ncols = j.at("ncols").get<std::size_t>();
    m.kind = parse_field_kind(j.at("kind").get<std::string>());
    m.cadence_minutes = j.value("cadence_minutes", 15);
    if (j.contains("frames")) {
      for (const auto& f : j.at("frames")) {
        m.frames.push_back(parse_iso8601(f.at("time").get<std::string>()));
        if (f.contains("crc32")) m.crc32.push_back(f.at("crc32").get<std::uint32_t>());
      }
      if (!m.crc32.empty() && m.crc32.size() != m.frames.size())
        fail(Errc::ParseError, "manifest crc32 list incomplete");
    }
  } catch (const json::exception& e) {
    fail(Errc::ParseError, "manifest " + path.string() + ": " + e.what());
  }
  m.geometry.validate();
  if (m.cadence_minutes != 15) fail(Errc::CadenceMismatch, "archive cadence must be 15 minutes");
  if (m.frames.empty() && fs::is_directory(root / "frames")) {
    for (const auto& entry : fs::directory_iterator(root / "frames")) {
      if (entry.path().extension() == ".f32") m.frames.push_back(parse_iso8601(entry.path().stem().string()));
    }
    std::sort(m.frames.begin(), m.frames.end());
  }
  return m;
}

std::vector<std::uint8_t> encode_frame(const RasterField& field) {
  std::vector<std::uint8_t> bytes(field.size() * sizeof(float));
  for (std::size_t i = 0; i < field.size(); ++i) {
    const float v = field.valid(i) ? float(field.value(i)) : std::numeric_limits<float>::quiet_NaN();
    std::memcpy(bytes.data() + i * sizeof(float), &v, sizeof(float));
  }
  return bytes;
}

RasterField decode_frame(std::span<const std::uint8_t> bytes, const GridGeometry& geometry, Instant t,
                         FieldKind kind) {
  if (bytes.size() != geometry.size() * sizeof(float))
    fail(Errc::CorruptFrame, "frame " + format_iso8601(t) + " has " + std::to_string(bytes.size()) +
                                 " bytes, expected " + std::to_string(geometry.size() * sizeof(float)));
  std::vector<double> values(geometry.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    float v;
    std::memcpy(&v, bytes.data() + i * sizeof(float), sizeof(float));
    values[i] = double(v);
  }
  return RasterField(geometry, t, kind, std::move(values));
}

FieldSequence load_field_archive(const fs::path& root, const std::optional<BoundingBox>& bbox,
                                 const std::optional<TimeRange>& range) {
  const ArchiveManifest m = read_manifest(root);
  std::map<Instant, std::optional<std::uint32_t>> index;
  for (std::size_t i = 0; i < m.frames.size(); ++i)
    index[m.frames[i]] = m.crc32.empty() ? std::nullopt : std::optional(m.crc32[i]);

  std::vector<Instant> wanted;
  if (range) {
    if (range->end < range->begin) fail(Errc::InvalidArgument, "time range end before begin");
    const auto step = std::chrono::duration_cast<std::chrono::seconds>(kStep).count();
    const auto b = range->begin.time_since_epoch().count();
    const auto rem = ((b % step) + step) % step;
    for (Instant s{std::chrono::seconds{b + (rem ? step - rem : 0)}}; s <= range->end; s += kStep)
      wanted.push_back(s);
  } else if (!index.empty()) {
    for (Instant s = index.begin()->first; s <= index.rbegin()->first; s += kStep) wanted.push_back(s);
  }
  for (const auto t : wanted)
    if (!index.count(t)) fail(Errc::MissingFrame, "archive " + root.string() + " lacks frame " + format_iso8601(t));

  std::vector<RasterField> fields;
  fields.reserve(wanted.size());
  for (const auto t : wanted) {
    const auto bytes = read_bytes(frame_path(root, t));
    if (const auto& crc = index.at(t); crc && *crc != crc32_of(bytes))
      fail(Errc::CorruptFrame, "checksum mismatch for frame " + format_iso8601(t));
    RasterField f = decode_frame(bytes, m.geometry, t, m.kind);
    fields.push_back(bbox ? crop(f, *bbox) : std::move(f));
  }
  return FieldSequence(std::move(fields));
}

void write_field_archive(const fs::path& root, std::span<const RasterField> fields) {
  if (fields.empty()) fail(Errc::InvalidArgument, "no fields to write");
  fs::create_directories(root / "frames");
  ArchiveManifest m;
  std::map<Instant, std::uint32_t> crcs;
  if (fs::exists(root / "manifest.json")) {
    m = read_manifest(root);
    if (!(m.geometry == fields.front().geometry()) || m.kind != fields.front().kind())
      fail(Errc::GeometryMismatch, "existing archive at " + root.string() + " has a different grid or kind");
    for (std::size_t i = 0; i < m.frames.size() && i < m.crc32.size(); ++i) crcs[m.frames[i]] = m.crc32[i];
  } else {
    m.geometry = fields.front().geometry();
    m.kind = fields.front().kind();
  }
  for (const auto& f : fields) {
    if (!(f.geometry() == m.geometry) || f.kind() != m.kind)
      fail(Errc::GeometryMismatch, "fields disagree on grid or kind");
    const auto bytes = encode_frame(f);
    std::ofstream out(frame_path(root, f.timestamp()), std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::IoError, "cannot write " + frame_path(root, f.timestamp()).string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    crcs[f.timestamp()] = crc32_of(bytes);
  }
  m.frames.clear();
  m.crc32.clear();
  for (const auto& [t, crc] : crcs) {
    m.frames.push_back(t);
    m.crc32.push_back(crc);
  }
  std::ofstream out(root / "manifest.json", std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot write manifest in " + root.string());
  out << manifest_to_json(m).dump(1) << '\n';
}

}  // namespace rampcast::ingest
