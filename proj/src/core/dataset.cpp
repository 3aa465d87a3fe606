#include "core/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace skyforge {

namespace {

void put_bytes(std::vector<uint8_t>& buf, const void* src, std::size_t n) {
  const uint8_t* p = static_cast<const uint8_t*>(src);
  buf.insert(buf.end(), p, p + n);
}

template <typename T>
void put_le(std::vector<uint8_t>& buf, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf.push_back(static_cast<uint8_t>((static_cast<uint64_t>(value) >> (8 * i)) & 0xFF));
}

void put_f32(std::vector<uint8_t>& buf, float value) {
  uint32_t bits;
  std::memcpy(&bits, &value, sizeof(bits));
  put_le(buf, bits);
}

class Reader {
 public:
  Reader(const uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::size_t offset() const { return offset_; }
  bool at_end() const { return offset_ == size_; }

  template <typename T>
  T get_le() {
    need(sizeof(T));
    uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<uint64_t>(data_[offset_ + i]) << (8 * i);
    offset_ += sizeof(T);
    return static_cast<T>(v);
  }

  float get_f32() {
    uint32_t bits = get_le<uint32_t>();
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  void get_bytes(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_ + offset_, n);
    offset_ += n;
  }

 private:
  void need(std::size_t n) {
    if (offset_ + n > size_)
      fail(ErrorCode::verify,
           "truncated dataset container at byte offset " + std::to_string(offset_));
  }
  const uint8_t* data_;
  std::size_t size_;
  std::size_t offset_ = 0;
};

void append_chunk_record(std::vector<uint8_t>& buf, const DemoChunk& c) {
  std::vector<uint8_t> record;
  put_le(record, c.chunk_id);
  put_le(record, c.rollout_id);
  put_le(record, c.start_index);
  put_le(record, c.scene_id);
  put_le(record, c.image_width);
  put_le(record, c.image_height);
  put_le(record, static_cast<uint16_t>(c.query.size()));
  put_bytes(record, c.query.data(), c.query.size());
  for (const auto& s : c.samples) {
    for (float v : s) put_f32(record, v);
  }
  for (const auto& img : c.images) put_bytes(record, img.data(), img.size());
  put_le(buf, static_cast<uint32_t>(record.size()));
  put_bytes(buf, record.data(), record.size());
}

std::vector<uint8_t> quantize_image(const HeatmapImage& image) {
  std::vector<uint8_t> out(image.rgb.size());
  for (std::size_t i = 0; i < image.rgb.size(); ++i)
    out[i] = static_cast<uint8_t>(std::lround(std::clamp(image.rgb[i], 0.0f, 1.0f) * 255.0f));
  return out;
}

std::array<float, 14> pack_sample(const DroneState& x, const ControlInput& u) {
  return {static_cast<float>(x.p_W.x()),  static_cast<float>(x.p_W.y()),
          static_cast<float>(x.p_W.z()),  static_cast<float>(x.v_W.x()),
          static_cast<float>(x.v_W.y()),  static_cast<float>(x.v_W.z()),
          static_cast<float>(x.q_BW.x()), static_cast<float>(x.q_BW.y()),
          static_cast<float>(x.q_BW.z()), static_cast<float>(x.q_BW.w()),
          static_cast<float>(u.f_th),     static_cast<float>(u.omega_B.x()),
          static_cast<float>(u.omega_B.y()), static_cast<float>(u.omega_B.z())};
}

}  // namespace

std::vector<DemoChunk> chunk_rollout(const Rollout& rollout, uint64_t rollout_id, uint32_t scene_id,
                                     const std::string& query, uint64_t* dropped_samples) {
  if (rollout.failed) fail(ErrorCode::invalid_argument, "chunk_rollout: rollout marked failed");
  std::size_t n = rollout.states.size();
  std::size_t n_chunks = n / kChunkSamples;
  if (dropped_samples) *dropped_samples += n - n_chunks * kChunkSamples;

  std::vector<DemoChunk> chunks;
  chunks.reserve(n_chunks);
  for (std::size_t ci = 0; ci < n_chunks; ++ci) {
    DemoChunk c;
    c.rollout_id = rollout_id;
    c.start_index = static_cast<uint32_t>(ci * kChunkSamples);
    c.scene_id = scene_id;
    c.query = query;
    c.samples.reserve(kChunkSamples);
    c.images.reserve(kChunkSamples);
    for (std::size_t k = c.start_index; k < c.start_index + kChunkSamples; ++k) {
      c.samples.push_back(pack_sample(rollout.states[k], rollout.inputs[k]));
      const HeatmapImage& img = rollout.images[k];
      c.image_width = static_cast<uint16_t>(img.width);
      c.image_height = static_cast<uint16_t>(img.height);
      c.images.push_back(quantize_image(img));
    }
    chunks.push_back(std::move(c));
  }
  return chunks;
}

void shuffle_chunks(std::vector<DemoChunk>& chunks, uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = chunks.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(chunks[i - 1], chunks[j]);
  }
}

uint64_t fnv1a64(const uint8_t* data, std::size_t len) {
  uint64_t h = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string to_hex(uint64_t value) {
  std::ostringstream os;
  os << std::hex;
  for (int shift = 60; shift >= 0; shift -= 4) os << ((value >> shift) & 0xF);
  return os.str();
}

nlohmann::json DatasetManifest::to_json() const {
  nlohmann::json j;
  j["dataset_version"] = dataset_version;
  j["master_seed"] = master_seed;
  j["scenes"] = scenes;
  j["queries"] = queries;
  j["trajectory_count"] = trajectory_count;
  auto counts = nlohmann::json::array();
  for (const auto& c : per_rollout_samples) counts.push_back({c.rollout_id, c.samples});
  j["per_rollout_samples"] = std::move(counts);
  j["total_samples"] = total_samples;
  j["chunk_count"] = chunk_count;
  j["dropped_samples"] = dropped_samples;
  j["failed_rollouts"] = failed_rollouts;
  j["discarded_trajectories"] = discarded_trajectories;
  j["container_hash"] = container_hash;
  return j;
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.dataset_version = j.at("dataset_version").get<int>();
  if (m.dataset_version != kDatasetVersion)
    fail(ErrorCode::parse, "unsupported dataset_version " + std::to_string(m.dataset_version));
  m.master_seed = j.at("master_seed").get<uint64_t>();
  m.scenes = j.at("scenes").get<std::vector<std::string>>();
  m.queries = j.at("queries").get<std::vector<std::string>>();
  m.trajectory_count = j.at("trajectory_count").get<uint64_t>();
  for (const auto& row : j.at("per_rollout_samples"))
    m.per_rollout_samples.push_back({row[0].get<uint64_t>(), row[1].get<uint64_t>()});
  m.total_samples = j.at("total_samples").get<uint64_t>();
  m.chunk_count = j.at("chunk_count").get<uint64_t>();
  m.dropped_samples = j.at("dropped_samples").get<uint64_t>();
  m.failed_rollouts = j.at("failed_rollouts").get<uint64_t>();
  m.discarded_trajectories = j.at("discarded_trajectories").get<uint64_t>();
  m.container_hash = j.at("container_hash").get<std::string>();
  return m;
}

void write_dataset(const std::vector<DemoChunk>& chunks, DatasetManifest& manifest,
                   const std::string& path) {
  std::vector<uint8_t> buf;
  put_bytes(buf, kContainerMagic, sizeof(kContainerMagic));
  put_le(buf, kContainerVersion);
  for (const auto& c : chunks) append_chunk_record(buf, c);
  manifest.container_hash = to_hex(fnv1a64(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write dataset container: " + path);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(ErrorCode::io, "short write to dataset container: " + path);
  out.close();

  std::ofstream mout(path + ".manifest.json");
  if (!mout) fail(ErrorCode::io, "cannot write manifest sidecar for: " + path);
  mout << manifest.to_json().dump(2) << "\n";
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io, "cannot open dataset container: " + path);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Reader r(buf.data(), buf.size());
  char magic[4];
  r.get_bytes(magic, 4);
  if (std::memcmp(magic, kContainerMagic, 4) != 0)
    fail(ErrorCode::verify, "bad container magic (not a dataset file): " + path);
  uint32_t version = r.get_le<uint32_t>();
  if (version != kContainerVersion)
    fail(ErrorCode::verify, "unsupported container version " + std::to_string(version));

  Dataset ds;
  while (!r.at_end()) {
    std::size_t record_start = r.offset();
    uint32_t record_len = r.get_le<uint32_t>();
    DemoChunk c;
    c.chunk_id = r.get_le<uint64_t>();
    c.rollout_id = r.get_le<uint64_t>();
    c.start_index = r.get_le<uint32_t>();
    c.scene_id = r.get_le<uint32_t>();
    c.image_width = r.get_le<uint16_t>();
    c.image_height = r.get_le<uint16_t>();
    uint16_t query_len = r.get_le<uint16_t>();
    c.query.resize(query_len);
    r.get_bytes(c.query.data(), query_len);
    c.samples.resize(kChunkSamples);
    for (auto& s : c.samples) {
      for (float& v : s) v = r.get_f32();
    }
    std::size_t image_bytes = static_cast<std::size_t>(c.image_width) * c.image_height * 3;
    c.images.assign(kChunkSamples, std::vector<uint8_t>(image_bytes));
    for (auto& img : c.images) r.get_bytes(img.data(), img.size());
    if (r.offset() - record_start != record_len + sizeof(uint32_t))
      fail(ErrorCode::verify, "record length mismatch at byte offset " + std::to_string(record_start));
    ds.chunks.push_back(std::move(c));
  }

  std::ifstream min(path + ".manifest.json");
  if (!min) fail(ErrorCode::io, "missing manifest sidecar: " + path + ".manifest.json");
  nlohmann::json j;
  try {
    min >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse, std::string("invalid manifest JSON: ") + e.what());
  }
  ds.manifest = DatasetManifest::from_json(j);
  return ds;
}

StatsReport dataset_stats(const DatasetManifest& manifest) {
  uint64_t sum = 0;
  uint64_t chunks = 0;
  for (const auto& c : manifest.per_rollout_samples) {
    sum += c.samples;
    chunks += c.samples / kChunkSamples;
  }
  if (sum != manifest.total_samples)
    fail(ErrorCode::verify, "identity violated: total_samples (" + std::to_string(manifest.total_samples) +
                                ") != sum of per-rollout counts (" + std::to_string(sum) + ")");
  if (chunks != manifest.chunk_count)
    fail(ErrorCode::verify, "identity violated: chunk_count (" + std::to_string(manifest.chunk_count) +
                                ") != sum of floor(count/40) (" + std::to_string(chunks) + ")");
  if (manifest.trajectory_count != manifest.per_rollout_samples.size())
    fail(ErrorCode::verify, "identity violated: trajectory_count != number of per-rollout entries");

  StatsReport report;
  report.trajectories = manifest.trajectory_count;
  report.query_count = manifest.queries.size();
  report.scene_count = manifest.scenes.size();
  report.total_samples = manifest.total_samples;
  report.chunk_count = manifest.chunk_count;
  report.chunked_samples = manifest.chunk_count * kChunkSamples;
  report.dropped_samples = manifest.dropped_samples;
  if (report.trajectories > 0) {
    report.mean_samples_per_trajectory =
        static_cast<double>(report.total_samples) / static_cast<double>(report.trajectories);
    report.mean_duration_seconds = (report.mean_samples_per_trajectory - 1.0) / 20.0;
  }
  return report;
}

std::string StatsReport::to_string() const {
  std::ostringstream os;
  os << "trajectories:            " << trajectories << "\n"
     << "queries:                 " << query_count << "\n"
     << "scenes:                  " << scene_count << "\n"
     << "total samples:           " << total_samples << "\n"
     << "chunks (40 samples):     " << chunk_count << "\n"
     << "chunked samples:         " << chunked_samples << "\n"
     << "dropped remainder:       " << dropped_samples << "\n"
     << "mean samples/trajectory: " << mean_samples_per_trajectory << "\n"
     << "mean duration (s):       " << mean_duration_seconds << "\n";
  return os.str();
}

StatsReport verify_dataset(const std::string& path) {
  Dataset ds = read_dataset(path);  // already validates structure/truncation

  // Hash check against the sidecar.
  std::ifstream in(path, std::ios::binary);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::string hash = to_hex(fnv1a64(buf.data(), buf.size()));
  if (hash != ds.manifest.container_hash)
    fail(ErrorCode::verify, "container hash mismatch: manifest " + ds.manifest.container_hash +
                                " vs actual " + hash);

  if (ds.chunks.size() != ds.manifest.chunk_count)
    fail(ErrorCode::verify, "identity violated: container holds " + std::to_string(ds.chunks.size()) +
                                " chunks, manifest says " + std::to_string(ds.manifest.chunk_count));

  // Chunk-level recount against the manifest's per-rollout ledger.
  for (const auto& c : ds.chunks) {
    if (c.samples.size() != kChunkSamples || c.images.size() != kChunkSamples)
      fail(ErrorCode::verify, "chunk " + std::to_string(c.chunk_id) + " does not hold exactly 40 samples");
    bool found = false;
    for (const auto& rc : ds.manifest.per_rollout_samples) {
      if (rc.rollout_id == c.rollout_id) {
        found = true;
        if (c.start_index + kChunkSamples > rc.samples)
          fail(ErrorCode::verify, "chunk " + std::to_string(c.chunk_id) +
                                      " extends past its rollout's sample count");
        break;
      }
    }
    if (!found)
      fail(ErrorCode::verify, "chunk " + std::to_string(c.chunk_id) + " references unknown rollout " +
                                  std::to_string(c.rollout_id));
  }
  return dataset_stats(ds.manifest);
}

}  // namespace skyforge
