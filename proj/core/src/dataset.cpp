#include "cain/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>

#include "cain/errors.hpp"
#include "cain/image_io.hpp"
#include "cain/synthetic_face.hpp"

namespace fs = std::filesystem;

namespace cain {

namespace {

bool valid_resolution(int r) {
  return std::find(std::begin(kSyntheticResolutions), std::end(kSyntheticResolutions), r) !=
         std::end(kSyntheticResolutions);
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(what + ": cannot parse `" + s + "` as an integer");
  return v;
}

IdentitySequence read_identity_dir(const fs::path& dir) {
  std::map<int, fs::path> images;
  std::map<int, fs::path> landmark_files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    const auto stem_end = name.find('.');
    if (stem_end == std::string::npos || stem_end == 0) continue;
    const std::string stem = name.substr(0, stem_end);
    const std::string ext = name.substr(stem_end);
    if (ext != ".png" && ext != ".landmarks.json") continue;
    int idx = 0;
    auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), idx);
    if (ec != std::errc() || ptr != stem.data() + stem.size()) continue;
    (ext == ".png" ? images : landmark_files)[idx] = entry.path();
  }

  IdentitySequence seq;
  seq.identity_id = dir.filename().string();
  for (const auto& [idx, path] : images) {
    auto lm_path = dir / (std::to_string(idx) + ".landmarks.json");
    if (!landmark_files.count(idx))
      throw DataError("identity " + seq.identity_id + ": missing landmark file " +
                      lm_path.string());
    seq.frames.push_back(read_png(path.string()));
    seq.landmarks.push_back(read_landmarks_json(landmark_files.at(idx).string()));
  }
  if (landmark_files.size() != images.size())
    throw DataError("identity " + seq.identity_id + ": " + std::to_string(images.size()) +
                    " frames but " + std::to_string(landmark_files.size()) + " landmark files");
  check_sequence(seq);
  return seq;
}

void check_dataset(const std::vector<IdentitySequence>& data) {
  std::set<std::string> ids;
  for (const auto& seq : data) {
    if (!ids.insert(seq.identity_id).second)
      throw DataError("duplicate identity id " + seq.identity_id);
    if (seq.resolution() != data.front().resolution())
      throw DataError("identity " + seq.identity_id + " has resolution " +
                      std::to_string(seq.resolution()) + ", expected " +
                      std::to_string(data.front().resolution()));
    if (!seq.landmarks.empty() && !data.front().landmarks.empty() &&
        seq.landmarks.front().size() != data.front().landmarks.front().size())
      throw DataError("identity " + seq.identity_id + " uses a different landmark count");
  }
}

}  // namespace

IdentitySequence generate_synthetic_identity(std::uint64_t seed, int n_frames, int resolution) {
  if (!valid_resolution(resolution))
    throw ConfigError("synthetic resolution must be 32, 64 or 128 (got " +
                      std::to_string(resolution) + ")");
  if (n_frames < 2) throw ConfigError("synthetic identity needs at least 2 frames");
  const FaceIdentity id = identity_from_seed(seed);
  IdentitySequence seq;
  seq.identity_id = "synth_" + std::to_string(seed);
  for (int f = 0; f < n_frames; ++f) {
    const FacePose pose = pose_for_frame(id, f);
    seq.frames.push_back(render_face(id, pose, resolution));
    seq.landmarks.push_back(face_landmarks(id, pose));
  }
  return seq;
}

void check_sequence(const IdentitySequence& seq) {
  if (seq.frames.size() != seq.landmarks.size())
    throw DataError("identity " + seq.identity_id + ": " + std::to_string(seq.frames.size()) +
                    " frames but " + std::to_string(seq.landmarks.size()) + " landmark sets");
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const auto& f = seq.frames[i];
    if (f.dim() != 3 || f.size(0) != 3 || f.size(1) != f.size(2) ||
        f.sizes() != seq.frames.front().sizes())
      throw DataError("identity " + seq.identity_id + ": frame " + std::to_string(i) +
                      " has shape " + shape_string(f) + ", expected square 3xHxW matching frame 0");
    check_landmarks(seq.landmarks[i]);
    if (seq.landmarks[i].size() != seq.landmarks.front().size())
      throw DataError("identity " + seq.identity_id + ": landmark count differs at frame " +
                      std::to_string(i));
  }
}

SampledBatch make_batch(const IdentitySequence& seq, const std::vector<int>& source_indices,
                        int target_index) {
  const int n = static_cast<int>(seq.size());
  const int res = seq.resolution();
  auto in_range = [n](int i) { return i >= 0 && i < n; };
  if (source_indices.empty() || !in_range(target_index) ||
      !std::all_of(source_indices.begin(), source_indices.end(), in_range))
    throw UsageError("make_batch: frame index out of range for identity " + seq.identity_id);
  SampledBatch b;
  for (int i : source_indices)
    b.sources.emplace_back(seq.frames[i], rasterize_landmarks(seq.landmarks[i], res));
  b.target_landmark = rasterize_landmarks(seq.landmarks[target_index], res);
  b.target_truth = seq.frames[target_index];
  b.source_indices = source_indices;
  b.target_index = target_index;
  b.identity_frame_index = source_indices.front();
  return b;
}

SampledBatch sample_frames(const IdentitySequence& seq, int K, std::mt19937_64& rng) {
  if (K < 1) throw UsageError("sample_frames: K must be >= 1");
  const int n = static_cast<int>(seq.size());
  if (n < K + 1)
    throw DataError("identity " + seq.identity_id + " has " + std::to_string(n) +
                    " frames; need >= K+1 = " + std::to_string(K + 1));
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first K+1 entries become a uniform draw without replacement.
  for (int i = 0; i <= K; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  return make_batch(seq, std::vector<int>(idx.begin(), idx.begin() + K), idx[K]);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::string item = text.substr(pos, comma - pos);
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (!item.empty()) {
      const auto dash = item.find('-');
      if (dash == std::string::npos) {
        seeds.push_back(static_cast<std::uint64_t>(parse_int(item, "seeds")));
      } else {
        const int lo = parse_int(item.substr(0, dash), "seeds");
        const int hi = parse_int(item.substr(dash + 1), "seeds");
        if (lo > hi) throw ConfigError("seeds: empty range `" + item + "`");
        for (int s = lo; s <= hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
      }
    }
    pos = comma + 1;
  }
  if (seeds.empty()) throw ConfigError("seeds: no seeds listed");
  return seeds;
}

std::vector<IdentitySequence> load_dataset(const std::string& root, const KeyValueConfig& manifest) {
  if (!manifest.contains("seeds")) return load_dataset(root);
  for (const auto& k : manifest.keys())
    if (k != "seeds" && k != "n_frames" && k != "resolution")
      throw ConfigError("synthetic manifest: unknown key `" + k + "`");
  const auto seeds = parse_seed_list(manifest.get("seeds"));
  const int n_frames = parse_int(manifest.get("n_frames"), "n_frames");
  const int resolution = parse_int(manifest.get("resolution"), "resolution");
  std::vector<IdentitySequence> data;
  for (auto s : seeds) data.push_back(generate_synthetic_identity(s, n_frames, resolution));
  check_dataset(data);
  return data;
}

std::vector<IdentitySequence> load_dataset(const std::string& root) {
  if (!fs::is_directory(root)) throw DataError("dataset root " + root + " is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  std::vector<IdentitySequence> data;
  for (const auto& d : dirs) data.push_back(read_identity_dir(d));
  if (data.empty()) throw DataError("dataset root " + root + " contains no identities");
  check_dataset(data);
  return data;
}

void write_dataset(const std::string& root, const std::vector<IdentitySequence>& data) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root)) throw IoError("cannot create dataset root " + root);
  for (const auto& seq : data) {
    check_sequence(seq);
    const fs::path dir = fs::path(root) / seq.identity_id;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    for (std::size_t i = 0; i < seq.size(); ++i) {
      write_png((dir / (std::to_string(i) + ".png")).string(), seq.frames[i]);
      write_landmarks_json((dir / (std::to_string(i) + ".landmarks.json")).string(),
                           seq.landmarks[i]);
    }
  }
}

std::pair<std::vector<IdentitySequence>, std::vector<IdentitySequence>> split_dataset(
    const std::vector<IdentitySequence>& data, double val_fraction) {
  const auto n_val = static_cast<std::size_t>(std::floor(data.size() * val_fraction));
  const std::size_t n_train = data.size() - n_val;
  return {std::vector<IdentitySequence>(data.begin(), data.begin() + n_train),
          std::vector<IdentitySequence>(data.begin() + n_train, data.end())};
}

}  // namespace cain
