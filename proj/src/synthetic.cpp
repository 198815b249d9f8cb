#include "unclean/synthetic.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "unclean/common.hpp"

namespace unclean {

namespace {

// Smooth periodic wave built from exact arithmetic only (no libm): a
// C1-continuous cosine stand-in with period 1 and range [-1, 1].
double det_wave(double phase) {
  double p = phase - static_cast<double>(static_cast<long long>(phase));
  if (p < 0.0) p += 1.0;
  // Mirror onto [0, 0.5], map through smoothstep, stretch to [-1, 1].
  const double q = p < 0.5 ? p * 2.0 : (1.0 - p) * 2.0;
  const double s = q * q * (3.0 - 2.0 * q);
  return 1.0 - 2.0 * s;
}

struct ClassGeometry {
  double cx, cy;    // blob center as a fraction of w/h
  int ku, kv;       // grating frequency in DCT index units on a 16-px grid
};

// Fixed layout for up to 8 classes; centers spread out, grating frequencies
// sit inside the default mid band (radius 4..6 at 16 px, scaled with size).
ClassGeometry geometry_for(int cls) {
  static const ClassGeometry table[8] = {
      {0.30, 0.30, 0, 4}, {0.70, 0.30, 4, 0}, {0.30, 0.70, 3, 3},
      {0.70, 0.70, 0, 6}, {0.50, 0.50, 6, 0}, {0.50, 0.20, 4, 3},
      {0.20, 0.50, 2, 5}, {0.80, 0.50, 5, 2},
  };
  return table[cls % 8];
}

ImageTensor render_sample(const SyntheticSpec& spec, int cls, Rng& rng) {
  const ClassGeometry geo = geometry_for(cls);
  const double cx = geo.cx * spec.w + rng.uniform(-spec.jitter, spec.jitter);
  const double cy = geo.cy * spec.h + rng.uniform(-spec.jitter, spec.jitter);
  const double inv2s2 = 1.0 / (2.0 * spec.blob_sigma * spec.blob_sigma);
  // Index k on an N-px axis means k half-cycles across the image, matching
  // the DCT-II bin of the same index; rescale the 16-px table to this size.
  const double size_scale = std::min(spec.h, spec.w) / 16.0;
  const double fu = geo.ku * size_scale / (2.0 * spec.h);
  const double fv = geo.kv * size_scale / (2.0 * spec.w);
  const double phase0 = rng.uniform();
  const double amp = spec.grating_amp * rng.uniform(0.5, 1.0);

  ImageTensor img(spec.h, spec.w, spec.chans);
  for (int ch = 0; ch < spec.chans; ++ch) {
    const double ch_gain = 1.0 - 0.15 * ch;
    for (int y = 0; y < spec.h; ++y)
      for (int x = 0; x < spec.w; ++x) {
        const double dx = x - cx, dy = y - cy;
        const double blob = 0.85 * det_exp(-(dx * dx + dy * dy) * inv2s2);
        const double grating = amp * 0.5 * (det_wave(phase0 + fu * y + fv * x) + 1.0);
        double v = ch_gain * (blob + grating) + rng.uniform(-spec.noise, spec.noise);
        img.at(ch, y, x) = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
      }
  }
  return img;
}

void validate(const SyntheticSpec& spec) {
  if (spec.classes < 2 || spec.classes > 64) throw ConfigError("synthetic: classes must be in [2, 64]");
  if (spec.h < 4 || spec.w < 4 || spec.h > 512 || spec.w > 512)
    throw ConfigError("synthetic: image size out of range");
  if (spec.chans < 1 || spec.chans > 4) throw ConfigError("synthetic: channels must be in [1, 4]");
  if (spec.train_per_class < 1 || spec.test_per_class < 1)
    throw ConfigError("synthetic: per-class counts must be positive");
}

}  // namespace

Dataset make_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  Dataset ds;
  std::ostringstream name;
  name << "synthetic-c" << spec.classes << "-" << spec.h << "x" << spec.w << "-s" << spec.seed;
  ds.name = name.str();
  ds.num_classes = spec.classes;
  Rng rng(spec.seed ^ 0x73796e7468ULL);
  // Interleave classes so batching without shuffles still sees all of them.
  for (int i = 0; i < spec.train_per_class; ++i)
    for (int cls = 0; cls < spec.classes; ++cls)
      ds.train.push_back(render_sample(spec, cls, rng), cls);
  for (int i = 0; i < spec.test_per_class; ++i)
    for (int cls = 0; cls < spec.classes; ++cls)
      ds.test.push_back(render_sample(spec, cls, rng), cls);
  return ds;
}

namespace {

std::string idx_hint(const std::string& dir) {
  return "; fetch the four MNIST IDX files (train-images-idx3-ubyte, train-labels-idx1-ubyte, "
         "t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte), gunzip them into '" +
         dir + "', then retry";
}

std::vector<unsigned char> read_file_bytes(const std::string& path, const std::string& dir) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DependencyError("missing dataset file: " + path + idx_hint(dir));
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return bytes;
}

// Sidecar checksum: written on first successful load, verified afterwards.
void check_or_record_digest(const std::string& path, const std::vector<unsigned char>& bytes,
                            const std::string& dir) {
  const std::string side = path + ".fnv";
  const std::string digest = hex64(fnv1a64(bytes.data(), bytes.size()));
  std::ifstream is(side);
  if (is) {
    std::string want;
    is >> want;
    if (want != digest)
      throw DependencyError("checksum mismatch for " + path + " (expected " + want + ", got " +
                            digest + "); delete the file and re-download" + idx_hint(dir));
    return;
  }
  std::ofstream os(side, std::ios::trunc);
  if (os) os << digest << "\n";
}

void load_idx_pair(const std::string& dir, const std::string& images_name,
                   const std::string& labels_name, LabeledSet& out) {
  namespace fs = std::filesystem;
  const std::string img_path = (fs::path(dir) / images_name).string();
  const std::string lbl_path = (fs::path(dir) / labels_name).string();
  std::vector<unsigned char> img_bytes = read_file_bytes(img_path, dir);
  std::vector<unsigned char> lbl_bytes = read_file_bytes(lbl_path, dir);
  check_or_record_digest(img_path, img_bytes, dir);
  check_or_record_digest(lbl_path, lbl_bytes, dir);

  auto be32 = [](const std::vector<unsigned char>& b, size_t off) {
    return (uint32_t(b[off]) << 24) | (uint32_t(b[off + 1]) << 16) | (uint32_t(b[off + 2]) << 8) |
           uint32_t(b[off + 3]);
  };
  if (img_bytes.size() < 16 || be32(img_bytes, 0) != 2051)
    throw DependencyError("bad IDX image magic in " + img_path + idx_hint(dir));
  if (lbl_bytes.size() < 8 || be32(lbl_bytes, 0) != 2049)
    throw DependencyError("bad IDX label magic in " + lbl_path + idx_hint(dir));
  const uint32_t n = be32(img_bytes, 4);
  const uint32_t rows = be32(img_bytes, 8);
  const uint32_t cols = be32(img_bytes, 12);
  if (be32(lbl_bytes, 4) != n)
    throw DependencyError("IDX image/label count mismatch in " + dir + idx_hint(dir));
  if (img_bytes.size() != 16 + size_t(n) * rows * cols || lbl_bytes.size() != 8 + size_t(n))
    throw DependencyError("IDX payload size mismatch in " + dir + idx_hint(dir));

  for (uint32_t i = 0; i < n; ++i) {
    ImageTensor img(int(rows), int(cols), 1);
    const size_t base = 16 + size_t(i) * rows * cols;
    for (size_t k = 0; k < size_t(rows) * cols; ++k)
      img.data[k] = img_bytes[base + k] / 255.0;
    out.push_back(std::move(img), int(lbl_bytes[8 + i]));
  }
}

}  // namespace

Dataset load_mnist(const std::string& dir) {
  Dataset ds;
  ds.name = "mnist";
  ds.num_classes = 10;
  load_idx_pair(dir, "train-images-idx3-ubyte", "train-labels-idx1-ubyte", ds.train);
  load_idx_pair(dir, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte", ds.test);
  if (ds.train.size() != 60000 || ds.test.size() != 10000)
    throw DependencyError("mnist: expected 60000 train / 10000 test samples, found " +
                          std::to_string(ds.train.size()) + "/" + std::to_string(ds.test.size()) +
                          idx_hint(dir));
  return ds;
}

DatasetSpec parse_dataset_spec(const std::string& text) {
  DatasetSpec spec;
  std::string head = text, rest;
  const size_t colon = text.find(':');
  if (colon != std::string::npos) {
    head = text.substr(0, colon);
    rest = text.substr(colon + 1);
  }
  if (head == "mnist") {
    spec.kind = "mnist";
    spec.path = rest.empty() ? "data/mnist" : rest;
    return spec;
  }
  if (head != "synthetic") throw ConfigError("unknown dataset '" + head + "'");
  spec.kind = "synthetic";
  std::istringstream ss(rest);
  std::string kv;
  while (std::getline(ss, kv, ',')) {
    if (kv.empty()) continue;
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("synthetic spec: expected key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    try {
      if (key == "classes") spec.synth.classes = std::stoi(val);
      else if (key == "h") spec.synth.h = std::stoi(val);
      else if (key == "w") spec.synth.w = std::stoi(val);
      else if (key == "chans") spec.synth.chans = std::stoi(val);
      else if (key == "per_class") spec.synth.train_per_class = std::stoi(val);
      else if (key == "test_per_class") spec.synth.test_per_class = std::stoi(val);
      else if (key == "seed") spec.synth.seed = std::stoull(val);
      else if (key == "blob_sigma") spec.synth.blob_sigma = std::stod(val);
      else if (key == "jitter") spec.synth.jitter = std::stod(val);
      else if (key == "noise") spec.synth.noise = std::stod(val);
      else if (key == "grating_amp") spec.synth.grating_amp = std::stod(val);
      else throw ConfigError("synthetic spec: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ConfigError("synthetic spec: bad value for '" + key + "'");
    } catch (const std::out_of_range&) {
      throw ConfigError("synthetic spec: value out of range for '" + key + "'");
    }
  }
  return spec;
}

Dataset ingest_dataset(const DatasetSpec& spec) {
  if (spec.kind == "synthetic") return make_synthetic(spec.synth);
  if (spec.kind == "mnist") return load_mnist(spec.path);
  throw ConfigError("unknown dataset kind '" + spec.kind + "'");
}

}  // namespace unclean
