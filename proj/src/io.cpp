#include "convbki/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace convbki {
namespace {

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian");

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open " + path);
  const std::streamoff size = in.tellg();
  in.seekg(0);
  std::vector<unsigned char> data(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(reinterpret_cast<char*>(data.data()), size)) {
    throw std::runtime_error("cannot read " + path);
  }
  return data;
}

struct Cursor {
  const unsigned char* p;
  const unsigned char* end;
  const std::string& path;

  Cursor(const std::vector<unsigned char>& data, const std::string& file)
      : p(data.data()), end(data.data() + data.size()), path(file) {}

  std::size_t remaining() const { return static_cast<std::size_t>(end - p); }

  template <typename T>
  T take() {
    T v;
    take_bytes(&v, sizeof(T));
    return v;
  }

  void take_bytes(void* dst, std::size_t n) {
    if (remaining() < n) throw std::runtime_error(path + ": truncated file");
    std::memcpy(dst, p, n);
    p += n;
  }

  void magic(const char* tag) {
    char got[4];
    take_bytes(got, 4);
    if (std::memcmp(got, tag, 4) != 0) {
      throw std::runtime_error(path + ": bad magic, expected " + tag);
    }
  }

  void done() {
    if (p != end) throw std::runtime_error(path + ": trailing bytes");
  }
};

struct Writer {
  std::ofstream out;
  std::string path;

  explicit Writer(const std::string& file)
      : out(file, std::ios::binary | std::ios::trunc), path(file) {
    if (!out) throw std::runtime_error("cannot open " + file + " for writing");
  }

  template <typename T>
  void put(const T& v) {
    put_bytes(&v, sizeof(T));
  }

  void put_bytes(const void* src, std::size_t n) {
    out.write(reinterpret_cast<const char*>(src), static_cast<std::streamsize>(n));
  }

  void finish() {
    out.flush();
    if (!out.good()) throw std::runtime_error("write failed for " + path);
  }
};

void store_floats(Writer& w, std::span<const double> values) {
  constexpr std::size_t kChunk = 1 << 16;
  std::vector<float> buf;
  for (std::size_t i = 0; i < values.size(); i += kChunk) {
    const std::size_t n = std::min(kChunk, values.size() - i);
    buf.resize(n);
    for (std::size_t j = 0; j < n; ++j) buf[j] = static_cast<float>(values[i + j]);
    w.put_bytes(buf.data(), n * sizeof(float));
  }
}

void load_floats(Cursor& c, std::span<double> values) {
  constexpr std::size_t kChunk = 1 << 16;
  std::vector<float> buf;
  for (std::size_t i = 0; i < values.size(); i += kChunk) {
    const std::size_t n = std::min(kChunk, values.size() - i);
    buf.resize(n);
    c.take_bytes(buf.data(), n * sizeof(float));
    for (std::size_t j = 0; j < n; ++j) values[i + j] = buf[j];
  }
}

}  // namespace

SemanticPointCloud load_cloud(const std::string& path) {
  const auto data = read_file(path);
  Cursor c(data, path);
  c.magic("CBKI");
  const auto version = c.take<std::uint32_t>();
  if (version != 1) throw std::runtime_error(path + ": unsupported frame version");
  const auto n = c.take<std::uint32_t>();
  const auto num_classes = c.take<std::uint32_t>();
  const auto mode = c.take<std::uint8_t>();
  if (num_classes < 1 || num_classes > 65536) {
    throw std::runtime_error(path + ": implausible class count");
  }
  if (mode > 1) throw std::runtime_error(path + ": unknown frame mode");
  const std::size_t per_point =
      12 + (mode == 0 ? 4 : 4 * static_cast<std::size_t>(num_classes));
  if (c.remaining() != per_point * n) {
    throw std::runtime_error(path + ": payload size does not match header");
  }

  SemanticPointCloud cloud;
  cloud.num_classes = static_cast<int>(num_classes);
  cloud.positions.resize(n);
  if (mode == 0) {
    cloud.labels.resize(n);
  } else {
    cloud.class_probs.resize(static_cast<std::size_t>(n) * num_classes);
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    float xyz[3];
    c.take_bytes(xyz, sizeof(xyz));
    cloud.positions[i] = Eigen::Vector3d(xyz[0], xyz[1], xyz[2]);
    if (mode == 0) {
      cloud.labels[i] = static_cast<int>(c.take<std::uint32_t>());
    } else {
      for (std::uint32_t k = 0; k < num_classes; ++k) {
        cloud.class_probs[static_cast<std::size_t>(i) * num_classes + k] =
            c.take<float>();
      }
    }
  }
  c.done();
  cloud.validate();
  return cloud;
}

void save_cloud(const std::string& path, const SemanticPointCloud& cloud) {
  cloud.validate();
  if (!cloud.has_probs() && !cloud.has_labels()) {
    throw std::invalid_argument("cloud has neither labels nor probabilities");
  }
  const std::uint8_t mode = cloud.has_probs() ? 1 : 0;
  Writer w(path);
  w.put_bytes("CBKI", 4);
  w.put<std::uint32_t>(1);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cloud.size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cloud.num_classes));
  w.put(mode);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const float xyz[3] = {static_cast<float>(cloud.positions[i].x()),
                          static_cast<float>(cloud.positions[i].y()),
                          static_cast<float>(cloud.positions[i].z())};
    w.put_bytes(xyz, sizeof(xyz));
    if (mode == 0) {
      w.put<std::uint32_t>(static_cast<std::uint32_t>(cloud.labels[i]));
    } else {
      for (int k = 0; k < cloud.num_classes; ++k) {
        w.put<float>(static_cast<float>(cloud.prob_row(i)[k]));
      }
    }
  }
  w.finish();
}

void save_map(const std::string& path, const DirichletVoxelGrid& grid) {
  Writer w(path);
  w.put_bytes("CBKM", 4);
  w.put<std::uint32_t>(1);
  w.put<double>(grid.resolution());
  for (int a = 0; a < 3; ++a) w.put<std::uint32_t>(static_cast<std::uint32_t>(grid.dims()[a]));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(grid.num_classes()));
  for (int a = 0; a < 3; ++a) w.put<double>(grid.origin()[a]);
  store_floats(w, grid.alpha());
  w.finish();
}

DirichletVoxelGrid load_map(const std::string& path, double prior,
                            std::vector<bool> dynamic_class_mask) {
  const auto data = read_file(path);
  Cursor c(data, path);
  c.magic("CBKM");
  const auto version = c.take<std::uint32_t>();
  if (version != 1) throw std::runtime_error(path + ": unsupported map version");
  const double resolution = c.take<double>();
  Eigen::Vector3i dims;
  for (int a = 0; a < 3; ++a) {
    const auto d = c.take<std::uint32_t>();
    if (d < 1 || d > 16384) throw std::runtime_error(path + ": implausible dims");
    dims[a] = static_cast<int>(d);
  }
  const auto num_classes = c.take<std::uint32_t>();
  if (num_classes < 1 || num_classes > 4096) {
    throw std::runtime_error(path + ": implausible class count");
  }
  Eigen::Vector3d origin;
  for (int a = 0; a < 3; ++a) origin[a] = c.take<double>();

  GridConfig config;
  config.resolution = resolution;
  config.min_bound = origin;
  config.max_bound = origin + resolution * dims.cast<double>();
  config.num_classes = static_cast<int>(num_classes);
  config.prior = prior;
  config.dynamic_class_mask = std::move(dynamic_class_mask);

  DirichletVoxelGrid grid(config);
  if (grid.dims() != dims) {
    throw std::runtime_error(path + ": reconstructed dims disagree");
  }
  const std::size_t count = grid.alpha().size();
  if (c.remaining() != count * sizeof(float)) {
    throw std::runtime_error(path + ": payload size does not match header");
  }
  load_floats(c, grid.alpha());
  c.done();
  return grid;
}

void save_dynamic_field(const std::string& path, const DynamicField& field,
                        double resolution) {
  field.validate();
  Writer w(path);
  w.put_bytes("CBKD", 4);
  w.put<std::uint32_t>(1);
  for (int a = 0; a < 3; ++a) w.put<std::uint32_t>(static_cast<std::uint32_t>(field.dims[a]));
  w.put<double>(resolution);
  w.put<std::uint8_t>(field.offsets_in_voxels ? 1 : 0);
  store_floats(w, field.offsets);
  store_floats(w, field.probs);
  w.finish();
}

DynamicField load_dynamic_field(const std::string& path, double expected_resolution) {
  const auto data = read_file(path);
  Cursor c(data, path);
  c.magic("CBKD");
  const auto version = c.take<std::uint32_t>();
  if (version != 1) throw std::runtime_error(path + ": unsupported field version");
  DynamicField field;
  for (int a = 0; a < 3; ++a) {
    const auto d = c.take<std::uint32_t>();
    if (d < 1 || d > 16384) throw std::runtime_error(path + ": implausible dims");
    field.dims[a] = static_cast<int>(d);
  }
  const double resolution = c.take<double>();
  if (expected_resolution != 0.0 && resolution != expected_resolution) {
    throw std::runtime_error(path + ": field resolution does not match grid");
  }
  field.offsets_in_voxels = c.take<std::uint8_t>() != 0;
  const std::size_t n =
      static_cast<std::size_t>(field.dims.x()) * field.dims.y() * field.dims.z();
  if (c.remaining() != 4 * n * sizeof(float)) {
    throw std::runtime_error(path + ": payload size does not match header");
  }
  field.offsets.resize(3 * n);
  field.probs.resize(n);
  load_floats(c, field.offsets);
  load_floats(c, field.probs);
  c.done();
  field.validate();
  return field;
}

std::vector<Pose> load_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<Pose> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double v[12];
    for (int i = 0; i < 12; ++i) {
      if (!(ls >> v[i])) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": expected 12 numbers");
      }
    }
    double extra;
    if (ls >> extra) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": trailing values");
    }
    Pose pose;
    pose.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    pose.translation = Eigen::Vector3d(v[3], v[7], v[11]);
    pose.validate(1e-4);
    poses.push_back(pose);
  }
  if (poses.empty()) throw std::runtime_error(path + ": no poses");
  return poses;
}

void save_poses(const std::string& path, const std::vector<Pose>& poses) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  char buf[32];
  for (const Pose& pose : poses) {
    const double v[12] = {
        pose.rotation(0, 0), pose.rotation(0, 1), pose.rotation(0, 2), pose.translation.x(),
        pose.rotation(1, 0), pose.rotation(1, 1), pose.rotation(1, 2), pose.translation.y(),
        pose.rotation(2, 0), pose.rotation(2, 1), pose.rotation(2, 2), pose.translation.z()};
    for (int i = 0; i < 12; ++i) {
      std::snprintf(buf, sizeof(buf), "%.12g", v[i]);
      out << (i ? " " : "") << buf;
    }
    out << "\n";
  }
  if (!out.good()) throw std::runtime_error("write failed for " + path);
}

void save_kernel_model(const std::string& path, const KernelModel& model) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << kernel_model_to_text(model);
  if (!out.good()) throw std::runtime_error("write failed for " + path);
}

KernelModel load_kernel_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return kernel_model_from_text(text.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

namespace {

std::string resolve_path(const std::filesystem::path& base, const std::string& entry) {
  std::filesystem::path p(entry);
  if (p.is_absolute()) return p.string();
  return (base / p).string();
}

}  // namespace

SequenceManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
  const std::filesystem::path base = std::filesystem::path(path).parent_path();

  SequenceManifest m;
  if (!j.contains("frames") || !j["frames"].is_array() || j["frames"].empty()) {
    throw std::runtime_error(path + ": manifest needs a non-empty frames array");
  }
  for (const auto& f : j["frames"]) m.frames.push_back(resolve_path(base, f.get<std::string>()));
  if (!j.contains("poses")) throw std::runtime_error(path + ": manifest needs poses");
  m.poses = resolve_path(base, j["poses"].get<std::string>());
  if (!j.contains("num_classes")) {
    throw std::runtime_error(path + ": manifest needs num_classes");
  }
  m.num_classes = j["num_classes"].get<int>();
  if (m.num_classes < 1) throw std::runtime_error(path + ": bad num_classes");
  if (j.contains("dynamic_fields")) {
    for (const auto& f : j["dynamic_fields"]) {
      m.dynamic_fields.push_back(resolve_path(base, f.get<std::string>()));
    }
    if (m.dynamic_fields.size() != m.frames.size()) {
      throw std::runtime_error(path + ": dynamic_fields must match frames");
    }
  }
  if (j.contains("class_names")) {
    for (const auto& n : j["class_names"]) m.class_names.push_back(n.get<std::string>());
    if (m.class_names.size() != static_cast<std::size_t>(m.num_classes)) {
      throw std::runtime_error(path + ": class_names must match num_classes");
    }
  }
  return m;
}

void save_manifest(const std::string& path, const SequenceManifest& manifest) {
  nlohmann::json j;
  j["frames"] = manifest.frames;
  j["poses"] = manifest.poses;
  j["num_classes"] = manifest.num_classes;
  if (!manifest.dynamic_fields.empty()) j["dynamic_fields"] = manifest.dynamic_fields;
  if (!manifest.class_names.empty()) j["class_names"] = manifest.class_names;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out.good()) throw std::runtime_error("write failed for " + path);
}

namespace {

std::vector<std::string> param_names(const KernelModel& model) {
  std::vector<std::string> names;
  switch (model.mode) {
    case KernelMode::kSingle:
      names.push_back("length");
      break;
    case KernelMode::kPerClass:
      for (int c = 0; c < model.num_classes; ++c) {
        names.push_back("length_" + std::to_string(c));
      }
      break;
    case KernelMode::kCompound:
      for (int c = 0; c < model.num_classes; ++c) {
        names.push_back("horizontal_" + std::to_string(c));
      }
      for (int c = 0; c < model.num_classes; ++c) {
        names.push_back("vertical_" + std::to_string(c));
      }
      break;
  }
  return names;
}

std::string g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void write_loss_trace_csv(const std::string& path,
                          const std::vector<TrainResult::Step>& trace,
                          const KernelModel& model) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "step,loss";
  for (const auto& name : param_names(model)) out << ',' << name;
  out << "\n";
  for (const auto& step : trace) {
    out << step.step << ',' << g9(step.loss);
    for (double l : step.lengths) out << ',' << g9(l);
    out << "\n";
  }
  if (!out.good()) throw std::runtime_error("write failed for " + path);
}

void write_variance_grid(const std::string& path, const DirichletVoxelGrid& grid) {
  Writer w(path);
  w.put_bytes("CBKV", 4);
  w.put<std::uint32_t>(1);
  w.put<double>(grid.resolution());
  for (int a = 0; a < 3; ++a) w.put<std::uint32_t>(static_cast<std::uint32_t>(grid.dims()[a]));
  for (int a = 0; a < 3; ++a) w.put<double>(grid.origin()[a]);

  const Eigen::Vector3i dims = grid.dims();
  std::vector<float> buf(static_cast<std::size_t>(dims.z()));
  for (int x = 0; x < dims.x(); ++x) {
    for (int y = 0; y < dims.y(); ++y) {
      for (int z = 0; z < dims.z(); ++z) {
        const DirichletStats stats = grid.voxel_stats({x, y, z});
        const int best = argmax_class({stats.expectation.data(),
                                       static_cast<std::size_t>(stats.expectation.size())});
        buf[static_cast<std::size_t>(z)] = static_cast<float>(stats.variance[best]);
      }
      w.put_bytes(buf.data(), buf.size() * sizeof(float));
    }
  }
  w.finish();
}

void write_filter_csv(const std::string& path, const FilterBank& bank) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "class,dx,dy,dz,offset_x,offset_y,offset_z,weight\n";
  const int r = bank.radius();
  for (int c = 0; c < bank.num_classes; ++c) {
    for (int k = 0; k < bank.size; ++k) {
      for (int l = 0; l < bank.size; ++l) {
        for (int m = 0; m < bank.size; ++m) {
          out << c << ',' << (k - r) << ',' << (l - r) << ',' << (m - r) << ','
              << g9(bank.resolution * (k - r)) << ',' << g9(bank.resolution * (l - r))
              << ',' << g9(bank.resolution * (m - r)) << ','
              << g9(bank.weight(c, k, l, m)) << "\n";
        }
      }
    }
  }
  if (!out.good()) throw std::runtime_error("write failed for " + path);
}

void write_bev_csv(const std::string& path, const DirichletVoxelGrid& grid) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const Eigen::Vector3i dims = grid.dims();
  for (int x = 0; x < dims.x(); ++x) {
    for (int y = 0; y < dims.y(); ++y) {
      int label = -1;
      for (int z = dims.z() - 1; z >= 0; --z) {
        const DirichletStats stats = grid.voxel_stats({x, y, z});
        if (!stats.has_evidence) continue;
        label = argmax_class({stats.expectation.data(),
                              static_cast<std::size_t>(stats.expectation.size())});
        break;
      }
      out << (y ? "," : "") << label;
    }
    out << "\n";
  }
  if (!out.good()) throw std::runtime_error("write failed for " + path);
}

namespace {

Eigen::Vector3d vec3_from_json(const nlohmann::json& j, const std::string& key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) {
    throw std::runtime_error("config: " + key + " must be a 3-element array");
  }
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

std::vector<double> lengths_from_json(const nlohmann::json& v, int count) {
  std::vector<double> out;
  if (v.is_number()) {
    out.assign(count, v.get<double>());
  } else if (v.is_array()) {
    for (const auto& e : v) out.push_back(e.get<double>());
    if (static_cast<int>(out.size()) != count) {
      throw std::runtime_error("config: kernel length array has wrong size");
    }
  } else {
    throw std::runtime_error("config: kernel lengths must be number or array");
  }
  return out;
}

}  // namespace

AppConfig default_app_config() {
  AppConfig cfg;
  cfg.grid.validate();
  cfg.kernel = KernelModel::single(cfg.grid.num_classes, cfg.train.initial_length);
  cfg.train.grid = cfg.grid;
  cfg.train.filter_size = cfg.filter_size;
  return cfg;
}

AppConfig load_app_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }

  AppConfig cfg;
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    if (g.contains("resolution")) cfg.grid.resolution = g["resolution"].get<double>();
    if (g.contains("min_bound")) cfg.grid.min_bound = vec3_from_json(g, "min_bound");
    if (g.contains("max_bound")) cfg.grid.max_bound = vec3_from_json(g, "max_bound");
    if (g.contains("num_classes")) cfg.grid.num_classes = g["num_classes"].get<int>();
    if (g.contains("prior")) cfg.grid.prior = g["prior"].get<double>();
    if (g.contains("dynamic_classes")) {
      cfg.grid.dynamic_class_mask.assign(cfg.grid.num_classes, false);
      for (const auto& c : g["dynamic_classes"]) {
        const int idx = c.get<int>();
        if (idx < 0 || idx >= cfg.grid.num_classes) {
          throw std::runtime_error("config: dynamic class index out of range");
        }
        cfg.grid.dynamic_class_mask[idx] = true;
      }
    }
  }
  cfg.grid.validate();

  if (j.contains("filter_size")) cfg.filter_size = j["filter_size"].get<int>();

  if (j.contains("train")) {
    const auto& t = j["train"];
    if (t.contains("window")) cfg.train.window = t["window"].get<int>();
    if (t.contains("learning_rate")) cfg.train.learning_rate = t["learning_rate"].get<double>();
    if (t.contains("epochs")) cfg.train.epochs = t["epochs"].get<int>();
    if (t.contains("beta1")) cfg.train.beta1 = t["beta1"].get<double>();
    if (t.contains("beta2")) cfg.train.beta2 = t["beta2"].get<double>();
    if (t.contains("adam_epsilon")) cfg.train.adam_epsilon = t["adam_epsilon"].get<double>();
    if (t.contains("initial_length")) cfg.train.initial_length = t["initial_length"].get<double>();
    if (t.contains("class_weights")) {
      const auto& w = t["class_weights"];
      if (w.is_string() && w.get<std::string>() == "auto") {
        cfg.auto_class_weights = true;
      } else if (w.is_array()) {
        for (const auto& e : w) cfg.train.class_weights.push_back(e.get<double>());
      } else {
        throw std::runtime_error("config: class_weights must be an array or \"auto\"");
      }
    }
  }

  KernelMode mode = KernelMode::kSingle;
  if (j.contains("kernel") && j["kernel"].contains("mode")) {
    mode = kernel_mode_from_name(j["kernel"]["mode"].get<std::string>());
  }
  const int num_classes = cfg.grid.num_classes;
  const double init_l = cfg.train.initial_length;
  switch (mode) {
    case KernelMode::kSingle:
      cfg.kernel = KernelModel::single(num_classes, init_l);
      if (j.contains("kernel") && j["kernel"].contains("length")) {
        cfg.kernel.lengths = lengths_from_json(j["kernel"]["length"], 1);
      }
      break;
    case KernelMode::kPerClass:
      cfg.kernel = KernelModel::per_class(num_classes, init_l);
      if (j.contains("kernel") && j["kernel"].contains("length")) {
        cfg.kernel.lengths = lengths_from_json(j["kernel"]["length"], num_classes);
      }
      break;
    case KernelMode::kCompound: {
      cfg.kernel = KernelModel::compound(num_classes, init_l, init_l);
      const auto& k = j["kernel"];
      if (k.contains("horizontal")) {
        const auto h = lengths_from_json(k["horizontal"], num_classes);
        std::copy(h.begin(), h.end(), cfg.kernel.lengths.begin());
      }
      if (k.contains("vertical")) {
        const auto v = lengths_from_json(k["vertical"], num_classes);
        std::copy(v.begin(), v.end(), cfg.kernel.lengths.begin() + num_classes);
      }
      break;
    }
  }
  cfg.kernel.validate();

  cfg.train.grid = cfg.grid;
  cfg.train.filter_size = cfg.filter_size;
  cfg.train.validate();
  return cfg;
}

}  // namespace convbki
