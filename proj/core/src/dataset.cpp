#include "fedsel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <zlib.h>

#include "fedsel/errors.hpp"

namespace fedsel {
namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
constexpr std::size_t kCifarRecordBytes = 3073;  // 1 label + 32*32*3 pixels

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

std::vector<unsigned char> gunzip(std::span<const unsigned char> bytes) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK) {
    throw IoError("zlib inflateInit failed");
  }
  std::vector<unsigned char> out;
  std::vector<unsigned char> chunk(1 << 16);
  zs.next_in = const_cast<Bytef*>(bytes.data());
  zs.avail_in = static_cast<uInt>(bytes.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Truncated("gzip stream is corrupt or truncated");
    }
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

std::vector<unsigned char> read_file_maybe_gzip(const std::string& path) {
  std::vector<unsigned char> bytes = read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B) {
    return gunzip(bytes);
  }
  return bytes;
}

std::uint32_t read_be32(std::span<const unsigned char> bytes, std::size_t offset) {
  return (std::uint32_t(bytes[offset]) << 24) | (std::uint32_t(bytes[offset + 1]) << 16) |
         (std::uint32_t(bytes[offset + 2]) << 8) | std::uint32_t(bytes[offset + 3]);
}

void write_be32(std::vector<unsigned char>& out, std::uint32_t value) {
  out.push_back(static_cast<unsigned char>(value >> 24));
  out.push_back(static_cast<unsigned char>(value >> 16));
  out.push_back(static_cast<unsigned char>(value >> 8));
  out.push_back(static_cast<unsigned char>(value));
}

struct IdxHeader {
  std::uint32_t magic = 0;
  std::vector<std::uint32_t> dims;
  std::size_t data_offset = 0;
};

IdxHeader parse_idx_header(std::span<const unsigned char> bytes,
                           std::uint32_t expected_magic, const char* what) {
  if (bytes.size() < 4) throw Truncated(std::string(what) + ": shorter than the magic");
  IdxHeader h;
  h.magic = read_be32(bytes, 0);
  if (h.magic != expected_magic) {
    throw BadMagic(std::string(what) + ": bad magic");
  }
  std::size_t ndims = h.magic & 0xFF;
  if (bytes.size() < 4 + 4 * ndims) {
    throw Truncated(std::string(what) + ": header promises dims beyond the file");
  }
  for (std::size_t d = 0; d < ndims; ++d) {
    h.dims.push_back(read_be32(bytes, 4 + 4 * d));
  }
  h.data_offset = 4 + 4 * ndims;
  return h;
}

}  // namespace

Dataset generate_synthetic(std::size_t n_samples, std::size_t n_features,
                           std::size_t n_classes, double class_separation,
                           RngStream& rng) {
  if (n_samples < n_classes) {
    throw TooFewSamples("generate_synthetic: n_samples < n_classes");
  }
  // Class means first, then samples, so draw order is fixed.
  std::vector<double> means(n_classes * n_features);
  for (std::size_t c = 0; c < n_classes; ++c) {
    double norm_sq = 0.0;
    for (std::size_t f = 0; f < n_features; ++f) {
      double v = rng.normal();
      means[c * n_features + f] = v;
      norm_sq += v * v;
    }
    double norm = std::sqrt(norm_sq);
    double scale = norm > 1e-12 ? class_separation / norm : 0.0;
    for (std::size_t f = 0; f < n_features; ++f) {
      means[c * n_features + f] *= scale;
    }
  }

  Dataset data;
  data.n_features = n_features;
  data.n_classes = n_classes;
  data.features.resize(n_samples * n_features);
  data.labels.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    std::size_t label = i % n_classes;  // balanced within +-1
    data.labels[i] = static_cast<int>(label);
    for (std::size_t f = 0; f < n_features; ++f) {
      data.features[i * n_features + f] = means[label * n_features + f] + rng.normal();
    }
  }
  return data;
}

Dataset load_idx_bytes(std::span<const unsigned char> image_bytes,
                       std::span<const unsigned char> label_bytes) {
  IdxHeader img = parse_idx_header(image_bytes, kIdxImageMagic, "IDX images");
  IdxHeader lab = parse_idx_header(label_bytes, kIdxLabelMagic, "IDX labels");

  std::size_t n = img.dims[0];
  std::size_t features_per_sample = 1;
  for (std::size_t d = 1; d < img.dims.size(); ++d) features_per_sample *= img.dims[d];

  if (lab.dims[0] != n) {
    throw DimensionMismatch("IDX image count differs from label count");
  }
  if (image_bytes.size() < img.data_offset + n * features_per_sample) {
    throw Truncated("IDX images: fewer bytes than the header promises");
  }
  if (label_bytes.size() < lab.data_offset + n) {
    throw Truncated("IDX labels: fewer bytes than the header promises");
  }

  Dataset data;
  data.n_features = features_per_sample;
  data.features.resize(n * features_per_sample);
  data.labels.resize(n);
  const unsigned char* px = image_bytes.data() + img.data_offset;
  for (std::size_t i = 0; i < n * features_per_sample; ++i) {
    data.features[i] = static_cast<double>(px[i]) / 255.0;
  }
  int max_label = 0;
  const unsigned char* ly = label_bytes.data() + lab.data_offset;
  for (std::size_t i = 0; i < n; ++i) {
    data.labels[i] = static_cast<int>(ly[i]);
    max_label = std::max(max_label, data.labels[i]);
  }
  data.n_classes = static_cast<std::size_t>(max_label) + 1;
  return data;
}

Dataset load_idx(const std::string& image_path, const std::string& label_path) {
  std::vector<unsigned char> images = read_file_maybe_gzip(image_path);
  std::vector<unsigned char> labels = read_file_maybe_gzip(label_path);
  return load_idx_bytes(images, labels);
}

std::vector<unsigned char> encode_idx_images(const Dataset& data, std::uint32_t rows,
                                             std::uint32_t cols) {
  if (static_cast<std::size_t>(rows) * cols != data.n_features) {
    throw DimensionMismatch("encode_idx_images: rows*cols != n_features");
  }
  std::vector<unsigned char> out;
  out.reserve(16 + data.features.size());
  write_be32(out, kIdxImageMagic);
  write_be32(out, static_cast<std::uint32_t>(data.n_samples()));
  write_be32(out, rows);
  write_be32(out, cols);
  for (double v : data.features) {
    double q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    out.push_back(static_cast<unsigned char>(q));
  }
  return out;
}

std::vector<unsigned char> encode_idx_labels(const Dataset& data) {
  std::vector<unsigned char> out;
  out.reserve(8 + data.n_samples());
  write_be32(out, kIdxLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(data.n_samples()));
  for (int y : data.labels) out.push_back(static_cast<unsigned char>(y));
  return out;
}

void write_idx(const Dataset& data, std::uint32_t rows, std::uint32_t cols,
               const std::string& image_path, const std::string& label_path) {
  std::vector<unsigned char> images = encode_idx_images(data, rows, cols);
  std::vector<unsigned char> labels = encode_idx_labels(data);
  std::ofstream img(image_path, std::ios::binary);
  if (!img) throw IoError("cannot write " + image_path);
  img.write(reinterpret_cast<const char*>(images.data()),
            static_cast<std::streamsize>(images.size()));
  std::ofstream lab(label_path, std::ios::binary);
  if (!lab) throw IoError("cannot write " + label_path);
  lab.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

Dataset load_cifar10_bytes(std::span<const unsigned char> bytes) {
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw Truncated("CIFAR-10 file length is not a multiple of 3073");
  }
  std::size_t n = bytes.size() / kCifarRecordBytes;
  Dataset data;
  data.n_features = kCifarRecordBytes - 1;
  data.n_classes = 10;
  data.features.resize(n * data.n_features);
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* rec = bytes.data() + i * kCifarRecordBytes;
    if (rec[0] > 9) {
      throw LabelOutOfRange("CIFAR-10 label byte > 9");
    }
    data.labels[i] = static_cast<int>(rec[0]);
    for (std::size_t f = 0; f < data.n_features; ++f) {
      data.features[i * data.n_features + f] = static_cast<double>(rec[1 + f]) / 255.0;
    }
  }
  return data;
}

Dataset load_cifar10_binary(const std::vector<std::string>& paths) {
  if (paths.empty()) {
    throw ConfigError("CIFAR-10 loader needs at least one file");
  }
  Dataset data;
  for (const std::string& path : paths) {
    std::vector<unsigned char> bytes = read_file_maybe_gzip(path);
    Dataset part = load_cifar10_bytes(bytes);
    if (data.labels.empty()) {
      data = std::move(part);
    } else {
      data.features.insert(data.features.end(), part.features.begin(), part.features.end());
      data.labels.insert(data.labels.end(), part.labels.begin(), part.labels.end());
    }
  }
  if (data.labels.empty()) throw TooFewSamples("CIFAR-10 files contain no records");
  return data;
}

Partition partition_iid(const Dataset& data, std::uint32_t n_clients, RngStream& rng) {
  std::size_t n = data.n_samples();
  if (n < n_clients) throw TooFewSamples("partition_iid: fewer samples than clients");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  Partition part;
  part.shards.resize(n_clients);
  std::size_t base = n / n_clients;
  std::size_t extra = n % n_clients;
  std::size_t cursor = 0;
  for (std::uint32_t c = 0; c < n_clients; ++c) {
    std::size_t size = base + (c < extra ? 1 : 0);
    part.shards[c].assign(order.begin() + cursor, order.begin() + cursor + size);
    cursor += size;
  }
  return part;
}

Partition partition_class_noniid(const Dataset& data, std::uint32_t n_clients,
                                 std::uint32_t classes_per_client, RngStream& rng) {
  const std::size_t n_classes = data.n_classes;
  if (classes_per_client == 0 || classes_per_client > n_classes) {
    throw InfeasibleAssignment("classes_per_client must be in [1, n_classes]");
  }
  const std::size_t slots = static_cast<std::size_t>(n_clients) * classes_per_client;
  if (slots < n_classes) {
    throw InfeasibleAssignment("too few class slots to cover every class");
  }

  // Round-robin class sequence over a shuffled client order: client j takes
  // classes_per_client consecutive (hence distinct) classes.
  std::vector<std::uint32_t> client_order(n_clients);
  std::iota(client_order.begin(), client_order.end(), 0u);
  rng.shuffle(client_order);

  std::vector<std::vector<std::uint32_t>> class_clients(n_classes);
  for (std::uint32_t j = 0; j < n_clients; ++j) {
    for (std::uint32_t m = 0; m < classes_per_client; ++m) {
      std::size_t slot = static_cast<std::size_t>(j) * classes_per_client + m;
      class_clients[slot % n_classes].push_back(client_order[j]);
    }
  }

  // Bucket sample indices per class, shuffle each, and split evenly among the
  // class's clients.
  std::vector<std::vector<std::size_t>> by_class(n_classes);
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (by_class[c].size() < class_clients[c].size()) {
      throw InfeasibleAssignment("class " + std::to_string(c) +
                                 " has fewer samples than assigned clients");
    }
  }

  Partition part;
  part.shards.resize(n_clients);
  for (std::size_t c = 0; c < n_classes; ++c) {
    rng.shuffle(by_class[c]);
    const auto& owners = class_clients[c];
    if (owners.empty()) continue;
    std::size_t base = by_class[c].size() / owners.size();
    std::size_t extra = by_class[c].size() % owners.size();
    std::size_t cursor = 0;
    for (std::size_t o = 0; o < owners.size(); ++o) {
      std::size_t size = base + (o < extra ? 1 : 0);
      auto& shard = part.shards[owners[o]];
      shard.insert(shard.end(), by_class[c].begin() + cursor,
                   by_class[c].begin() + cursor + size);
      cursor += size;
    }
  }
  return part;
}

Partition partition_quantity_skew(const Dataset& data, std::uint32_t n_clients,
                                  double dirichlet_alpha, RngStream& rng) {
  std::size_t n = data.n_samples();
  if (n < n_clients) throw TooFewSamples("partition_quantity_skew: fewer samples than clients");

  std::vector<double> proportions = rng.dirichlet(dirichlet_alpha, n_clients);

  // Largest-remainder rounding so sizes sum exactly to n.
  std::vector<std::size_t> sizes(n_clients);
  std::vector<std::pair<double, std::uint32_t>> remainders(n_clients);
  std::size_t assigned = 0;
  for (std::uint32_t c = 0; c < n_clients; ++c) {
    double quota = proportions[c] * static_cast<double>(n);
    sizes[c] = static_cast<std::size_t>(std::floor(quota));
    remainders[c] = {quota - std::floor(quota), c};
    assigned += sizes[c];
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; assigned < n; ++i) {
    sizes[remainders[i % n_clients].second] += 1;
    ++assigned;
  }

  // Floor every shard at one sample, taking the deficit from the largest.
  for (std::uint32_t c = 0; c < n_clients; ++c) {
    if (sizes[c] > 0) continue;
    std::uint32_t largest = 0;
    for (std::uint32_t j = 1; j < n_clients; ++j) {
      if (sizes[j] > sizes[largest]) largest = j;
    }
    sizes[largest] -= 1;
    sizes[c] += 1;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  Partition part;
  part.shards.resize(n_clients);
  std::size_t cursor = 0;
  for (std::uint32_t c = 0; c < n_clients; ++c) {
    part.shards[c].assign(order.begin() + cursor, order.begin() + cursor + sizes[c]);
    cursor += sizes[c];
  }
  return part;
}

Partition make_partition(const Dataset& data, const ExperimentConfig& config,
                         RngStream& rng) {
  switch (config.partition.scheme) {
    case PartitionScheme::Iid:
      return partition_iid(data, config.num_clients, rng);
    case PartitionScheme::ClassNonIid:
      return partition_class_noniid(data, config.num_clients,
                                    config.partition.classes_per_client, rng);
    case PartitionScheme::QuantitySkew:
      return partition_quantity_skew(data, config.num_clients,
                                     config.partition.dirichlet_alpha, rng);
  }
  throw ConfigError("unhandled partition scheme");
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& data, double test_fraction,
                                             RngStream& rng) {
  std::size_t n = data.n_samples();
  std::size_t n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  auto take = [&](std::size_t begin, std::size_t end) {
    Dataset out;
    out.n_features = data.n_features;
    out.n_classes = data.n_classes;
    out.features.reserve((end - begin) * data.n_features);
    out.labels.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      auto r = data.row(order[i]);
      out.features.insert(out.features.end(), r.begin(), r.end());
      out.labels.push_back(data.labels[order[i]]);
    }
    return out;
  };
  Dataset test = take(0, n_test);
  Dataset train = take(n_test, n);
  return {std::move(train), std::move(test)};
}

Dataset load_dataset(const DatasetConfig& config, RngStream& rng) {
  switch (config.kind) {
    case DatasetKind::Synthetic:
      return generate_synthetic(config.synthetic.n_samples, config.synthetic.n_features,
                                config.synthetic.n_classes,
                                config.synthetic.class_separation, rng);
    case DatasetKind::Idx:
      return load_idx(config.idx.images, config.idx.labels);
    case DatasetKind::Cifar10Binary:
      return load_cifar10_binary(config.cifar_files);
  }
  throw ConfigError("unhandled dataset kind");
}

}  // namespace fedsel
