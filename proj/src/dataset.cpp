#include "scenesynth/dataset.hpp"

#include <algorithm>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace scenesynth::dataset {
namespace {

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void check_in_bounds(const BoxI& b, ImageSize size) {
  if (b.x_min < 0 || b.y_min < 0 || b.x_max >= size.width || b.y_max >= size.height || b.x_min > b.x_max ||
      b.y_min > b.y_max) {
    std::ostringstream os;
    os << "box " << b << " lies outside the " << size.width << "x" << size.height << " image";
    throw BoxOutOfBounds(os.str());
  }
}

void write_bndbox(std::ostringstream& os, const char* tag, const BoxI& b) {
  os << "\t\t<" << tag << ">\n"
     << "\t\t\t<xmin>" << b.x_min + 1 << "</xmin>\n"
     << "\t\t\t<ymin>" << b.y_min + 1 << "</ymin>\n"
     << "\t\t\t<xmax>" << b.x_max + 1 << "</xmax>\n"
     << "\t\t\t<ymax>" << b.y_max + 1 << "</ymax>\n"
     << "\t\t</" << tag << ">\n";
}

BoxI read_bndbox(const boost::property_tree::ptree& node) {
  return {node.get<int>("xmin") - 1, node.get<int>("ymin") - 1, node.get<int>("xmax") - 1, node.get<int>("ymax") - 1};
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if constexpr (std::is_floating_point_v<T>) {
    // std::from_chars for double is unavailable on some toolchains; strtod is locale-free enough for '.'.
    char* end = nullptr;
    out = std::strtod(first, &end);
    return !s.empty() && end == last && std::isfinite(out);
  } else {
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
  }
}

int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

std::string format_box(const BoxI& b) {
  return std::to_string(b.x_min) + "," + std::to_string(b.y_min) + "," + std::to_string(b.x_max) + "," +
         std::to_string(b.y_max);
}

BoxI parse_box(const std::string& s) {
  const auto parts = split(s, ',');
  BoxI b;
  if (parts.size() != 4 || !parse_number(parts[0], b.x_min) || !parse_number(parts[1], b.y_min) ||
      !parse_number(parts[2], b.x_max) || !parse_number(parts[3], b.y_max))
    throw ParseError("malformed box '" + s + "' in manifest");
  return b;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string export_voc_xml(const FrameRecord& record, ImageSize size, const VocOptions& options) {
  std::ostringstream os;
  const std::filesystem::path image(record.image_path);
  os << "<annotation>\n"
     << "\t<folder>" << image.parent_path().string() << "</folder>\n"
     << "\t<filename>" << image.filename().string() << "</filename>\n"
     << "\t<source>\n\t\t<database>scenesynth</database>\n\t</source>\n"
     << "\t<size>\n\t\t<width>" << size.width << "</width>\n\t\t<height>" << size.height
     << "</height>\n\t\t<depth>3</depth>\n\t</size>\n"
     << "\t<segmented>0</segmented>\n";
  for (const auto& a : record.annotations) {
    check_in_bounds(a.full_bbox, size);
    if (a.visible_bbox) check_in_bounds(*a.visible_bbox, size);
    os << "\t<object>\n"
       << "\t\t<name>" << options.class_name << "</name>\n"
       << "\t\t<pose>Unspecified</pose>\n"
       << "\t\t<truncated>" << (a.truncated ? 1 : 0) << "</truncated>\n"
       << "\t\t<difficult>" << (a.visibility < options.difficult_threshold ? 1 : 0) << "</difficult>\n";
    write_bndbox(os, "bndbox", a.full_bbox);
    os << "\t\t<instance_id>" << a.instance_id << "</instance_id>\n"
       << "\t\t<visibility>" << fixed6(a.visibility) << "</visibility>\n";
    if (a.visible_bbox) write_bndbox(os, "visible_bndbox", *a.visible_bbox);
    os << "\t</object>\n";
  }
  os << "</annotation>\n";
  return os.str();
}

VocAnnotation parse_voc_xml(std::string_view xml) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree);
    const auto& root = tree.get_child("annotation");
    VocAnnotation ann;
    ann.filename = root.get<std::string>("filename", "");
    ann.size = {root.get<int>("size.width"), root.get<int>("size.height")};
    for (const auto& [tag, node] : root) {
      if (tag != "object") continue;
      VocObject obj;
      obj.name = node.get<std::string>("name");
      obj.truncated = node.get<int>("truncated", 0) != 0;
      obj.difficult = node.get<int>("difficult", 0) != 0;
      obj.box = read_bndbox(node.get_child("bndbox"));
      obj.instance_id = node.get<std::uint32_t>("instance_id", 0);
      obj.visibility = node.get<double>("visibility", 1.0);
      if (const auto vis = node.get_child_optional("visible_bndbox")) obj.visible_box = read_bndbox(*vis);
      ann.objects.push_back(obj);
    }
    return ann;
  } catch (const pt::ptree_error& e) {
    throw ParseError(std::string("malformed VOC annotation: ") + e.what());
  }
}

CsvImport import_csv_annotations(const std::filesystem::path& path, const ColumnMap& columns,
                                 const CoordinateConvention& convention) {
  return import_csv_annotations_text(read_file(path), columns, convention);
}

CsvImport import_csv_annotations_text(std::string_view text, const ColumnMap& columns,
                                      const CoordinateConvention& convention) {
  std::vector<std::string> lines;
  for (auto& line : split(text, '\n')) {
    if (!trim(line).empty()) lines.push_back(trim(line));
  }
  if (lines.empty()) throw EmptyFile("CSV annotation file is empty");

  const std::vector<std::pair<const char*, const std::string*>> wanted = {
      {"frame", &columns.frame}, {"id", &columns.id}, {"x1", &columns.x1},
      {"y1", &columns.y1},       {"x2", &columns.x2}, {"y2", &columns.y2}};
  std::vector<std::size_t> index(wanted.size());
  std::size_t first_row = 0;
  if (columns.has_header) {
    auto header = split(lines.front(), ',');
    for (auto& h : header) h = trim(h);
    for (std::size_t k = 0; k < wanted.size(); ++k) {
      const auto it = std::find(header.begin(), header.end(), *wanted[k].second);
      if (it == header.end())
        throw MissingColumn("CSV has no column '" + *wanted[k].second + "' for " + wanted[k].first);
      index[k] = static_cast<std::size_t>(it - header.begin());
    }
    first_row = 1;
  } else {
    for (std::size_t k = 0; k < wanted.size(); ++k) {
      if (!parse_number(*wanted[k].second, index[k]))
        throw MissingColumn(std::string("column for ") + wanted[k].first + " must be an index without a header");
    }
  }
  if (first_row >= lines.size()) throw EmptyFile("CSV annotation file has a header but no rows");

  CsvImport result;
  std::map<int, FrameRecord> frames;
  for (std::size_t r = first_row; r < lines.size(); ++r) {
    auto cells = split(lines[r], ',');
    for (auto& c : cells) c = trim(c);
    int frame = 0;
    long long id = 0;
    double v[4] = {};
    bool ok = std::all_of(index.begin(), index.end(), [&](std::size_t i) { return i < cells.size(); });
    // Frame numbers and ids may be written as floats by some tools; accept integral values.
    double frame_d = 0.0, id_d = 0.0;
    ok = ok && parse_number(cells[index[0]], frame_d) && parse_number(cells[index[1]], id_d) &&
         frame_d == std::floor(frame_d) && id_d == std::floor(id_d) && frame_d >= 0 && id_d >= 0;
    for (int k = 0; ok && k < 4; ++k) ok = parse_number(cells[index[2 + static_cast<std::size_t>(k)]], v[k]);
    if (!ok) {
      ++result.malformed_rows;
      continue;
    }
    frame = static_cast<int>(frame_d);
    id = static_cast<long long>(id_d);
    double x1 = v[0], y1 = v[1], x2 = v[2], y2 = v[3];
    if (convention.format == BoxFormat::CornerSize) {
      x2 = x1 + v[2] - 1.0;
      y2 = y1 + v[3] - 1.0;
    }
    if (convention.one_based) {
      x1 -= 1.0;
      y1 -= 1.0;
      x2 -= 1.0;
      y2 -= 1.0;
    }
    if (x1 > x2) std::swap(x1, x2);
    if (y1 > y2) std::swap(y1, y2);
    AnnotationRecord rec;
    rec.instance_id = static_cast<std::uint32_t>(id);
    rec.full_bbox = {round_half_up(x1), round_half_up(y1), round_half_up(x2), round_half_up(y2)};
    rec.visible_bbox = rec.full_bbox;
    rec.visibility = 1.0;
    auto& fr = frames[frame];
    fr.frame_index = frame;
    fr.image_path = "images/" + frame_stem(frame) + ".ppm";
    fr.annotations.push_back(rec);
  }
  for (auto& [idx, fr] : frames) result.frames.push_back(std::move(fr));
  return result;
}

BoxI rescale_box(const BoxI& b, ImageSize from, ImageSize to) {
  const double sx = static_cast<double>(to.width) / from.width;
  const double sy = static_cast<double>(to.height) / from.height;
  auto cx = [&](int v) { return std::clamp(round_half_up(v * sx), 0, to.width - 1); };
  auto cy = [&](int v) { return std::clamp(round_half_up(v * sy), 0, to.height - 1); };
  return {cx(b.x_min), cy(b.y_min), cx(b.x_max), cy(b.y_max)};
}

std::vector<FrameRecord> rescale_labels(const std::vector<FrameRecord>& records, ImageSize from, ImageSize to) {
  std::vector<FrameRecord> out = records;
  for (auto& fr : out) {
    for (auto& a : fr.annotations) {
      a.full_bbox = rescale_box(a.full_bbox, from, to);
      if (a.visible_bbox) a.visible_bbox = rescale_box(*a.visible_bbox, from, to);
    }
  }
  return out;
}

std::string frame_stem(int frame_index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", frame_index);
  return buf;
}

std::string format_manifest(const DatasetManifest& m) {
  std::ostringstream os;
  os << "scenesynth-manifest 1\n"
     << "name " << m.name << "\n"
     << "image_size " << m.image_size.width << ' ' << m.image_size.height << "\n"
     << "config_hash " << m.config_hash << "\n"
     << "rng_seed " << m.rng_seed << "\n"
     << "frames " << m.frames.size() << "\n"
     << "---\n";
  for (const auto& fr : m.frames) {
    os << fr.frame_index << ' ' << fr.image_path << ' ' << fr.annotations.size();
    for (const auto& a : fr.annotations) {
      os << ' ' << a.instance_id << ':' << format_box(a.full_bbox) << ':'
         << (a.visible_bbox ? format_box(*a.visible_bbox) : "-") << ':' << fixed6(a.visibility) << ':'
         << (a.truncated ? 1 : 0);
    }
    os << '\n';
  }
  return os.str();
}

DatasetManifest parse_manifest(std::string_view text) {
  const auto lines = split(text, '\n');
  DatasetManifest m;
  std::size_t i = 0;
  auto next = [&]() -> std::string {
    if (i >= lines.size()) throw ParseError("manifest ends early");
    return lines[i++];
  };
  auto field = [&](const std::string& key) {
    const std::string line = next();
    if (line.rfind(key + " ", 0) != 0) throw ParseError("manifest: expected '" + key + "'");
    return line.substr(key.size() + 1);
  };
  if (next() != "scenesynth-manifest 1") throw ParseError("not a scenesynth manifest (version 1)");
  m.name = field("name");
  {
    std::istringstream is(field("image_size"));
    if (!(is >> m.image_size.width >> m.image_size.height)) throw ParseError("manifest: bad image_size");
  }
  m.config_hash = field("config_hash");
  if (!parse_number(field("rng_seed"), m.rng_seed)) throw ParseError("manifest: bad rng_seed");
  std::size_t count = 0;
  if (!parse_number(field("frames"), count)) throw ParseError("manifest: bad frame count");
  if (next() != "---") throw ParseError("manifest: missing header terminator");
  for (std::size_t f = 0; f < count; ++f) {
    const auto tokens = split(next(), ' ');
    FrameRecord fr;
    std::size_t n = 0;
    if (tokens.size() < 3 || !parse_number(tokens[0], fr.frame_index) || !parse_number(tokens[2], n) ||
        tokens.size() != 3 + n)
      throw ParseError("manifest: malformed frame line " + std::to_string(f));
    fr.image_path = tokens[1];
    for (std::size_t k = 0; k < n; ++k) {
      const auto parts = split(tokens[3 + k], ':');
      AnnotationRecord a;
      int trunc = 0;
      if (parts.size() != 5 || !parse_number(parts[0], a.instance_id) || !parse_number(parts[3], a.visibility) ||
          !parse_number(parts[4], trunc))
        throw ParseError("manifest: malformed annotation '" + tokens[3 + k] + "'");
      a.full_bbox = parse_box(parts[1]);
      if (parts[2] != "-") a.visible_bbox = parse_box(parts[2]);
      a.truncated = trunc != 0;
      fr.annotations.push_back(a);
    }
    m.frames.push_back(std::move(fr));
  }
  return m;
}

void write_manifest(const std::filesystem::path& root, const DatasetManifest& manifest) {
  std::filesystem::create_directories(root);
  write_file(root / "manifest.txt", format_manifest(manifest));
}

DatasetManifest read_manifest(const std::filesystem::path& root) {
  return parse_manifest(read_file(root / "manifest.txt"));
}

void write_frame(const std::filesystem::path& root, const FrameRecord& record, const RgbImage& image,
                 const VocOptions& options) {
  std::filesystem::create_directories(root / "images");
  std::filesystem::create_directories(root / "annotations");
  write_ppm(root / record.image_path, image);
  write_file(root / "annotations" / (frame_stem(record.frame_index) + ".xml"),
             export_voc_xml(record, {image.width(), image.height()}, options));
}

std::vector<GroundTruthBox> ground_truth(const FrameRecord& record, double difficult_threshold) {
  std::vector<GroundTruthBox> out;
  out.reserve(record.annotations.size());
  for (const auto& a : record.annotations) out.push_back({a.full_bbox, a.visibility < difficult_threshold});
  return out;
}

std::string fingerprint(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace scenesynth::dataset
