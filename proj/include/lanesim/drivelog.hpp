#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lanesim/config_io.hpp"
#include "lanesim/control_law.hpp"
#include "lanesim/errors.hpp"
#include "lanesim/image.hpp"
#include "lanesim/png_io.hpp"
#include "lanesim/projection.hpp"
#include "lanesim/rng.hpp"

namespace lanesim {

// Drive-log directory layout:
//   manifest.csv      frame_id,timestamp,speed,steering_deg,blinker_l,blinker_r
//   projection.cfg    cylindrical geometry the frames were captured under
//   frames/<id>.png   one RGB frame per manifest row
//   track.cfg         present only for synthetic logs (ground-truth track)
// Angles are degrees in the CSV for auditability and radians in memory.

struct FrameRecord {
  std::string frame_id;
  double timestamp = 0.0;     // seconds
  double speed = 0.0;         // m/s
  double steering = 0.0;      // steering-wheel radians
  bool blinker_left = false;
  bool blinker_right = false;
};

class FrameStore {
 public:
  virtual ~FrameStore() = default;
  virtual size_t size() const = 0;
  virtual Image load(size_t index) const = 0;
};

class MemoryFrameStore final : public FrameStore {
 public:
  explicit MemoryFrameStore(std::vector<Image> frames) : frames_(std::move(frames)) {}
  size_t size() const override { return frames_.size(); }
  Image load(size_t index) const override { return frames_.at(index); }

 private:
  std::vector<Image> frames_;
};

class DiskFrameStore final : public FrameStore {
 public:
  DiskFrameStore(std::filesystem::path dir, std::vector<std::string> files)
      : dir_(std::move(dir)), files_(std::move(files)) {}
  size_t size() const override { return files_.size(); }
  Image load(size_t index) const override { return read_png(dir_ / files_.at(index)); }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

/// View of a parent store through an index list (filtered logs stay lazy).
class SubsetFrameStore final : public FrameStore {
 public:
  SubsetFrameStore(std::shared_ptr<const FrameStore> parent, std::vector<size_t> indices)
      : parent_(std::move(parent)), indices_(std::move(indices)) {}
  size_t size() const override { return indices_.size(); }
  Image load(size_t index) const override { return parent_->load(indices_.at(index)); }

 private:
  std::shared_ptr<const FrameStore> parent_;
  std::vector<size_t> indices_;
};

struct DriveLog {
  ProjectionSpec spec;
  std::vector<FrameRecord> frames;
  std::shared_ptr<const FrameStore> store;
  std::string track_document;  // serialized track for synthetic logs, else empty

  Image frame_image(size_t index) const {
    if (!store) throw DataError("drive log has no frame store");
    return store->load(index);
  }

  double duration(double dt) const { return static_cast<double>(frames.size()) * dt; }

  void validate() const {
    spec.validate();
    if (frames.empty()) throw DataError("drive log is empty");
    if (store && store->size() != frames.size())
      throw DataError("drive log frame store size does not match manifest");
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& f : frames) {
      if (!std::isfinite(f.timestamp) || f.timestamp <= prev)
        throw DataError("drive log timestamps must be strictly increasing (frame " +
                        f.frame_id + ")");
      prev = f.timestamp;
      if (!std::isfinite(f.speed) || f.speed < 0.0)
        throw DataError("drive log speed must be finite and >= 0 (frame " + f.frame_id + ")");
      if (!std::isfinite(f.steering) || std::abs(f.steering) > kMaxSteeringWheel + 1e-9)
        throw DataError("drive log steering outside mechanical range (frame " + f.frame_id + ")");
    }
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_csv_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw DataError("malformed number in manifest (" + what + "): '" + s + "'");
  return v;
}

inline bool parse_csv_bool(const std::string& s, const std::string& what) {
  if (s == "0") return false;
  if (s == "1") return true;
  throw DataError("malformed flag in manifest (" + what + "): '" + s + "'");
}

}  // namespace detail

inline const char* kManifestHeader = "frame_id,timestamp,speed,steering_deg,blinker_l,blinker_r";

inline DriveLog load_drive_log(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::path manifest = dir / "manifest.csv";
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open " + manifest.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty manifest: " + manifest.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader)
    throw DataError("unexpected manifest header in " + manifest.string() + ": '" + line + "'");

  DriveLog log;
  std::vector<std::string> files;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cols = detail::split_csv_line(line);
    if (cols.size() != 6)
      throw DataError(manifest.string() + ":" + std::to_string(lineno) +
                      ": expected 6 columns, got " + std::to_string(cols.size()));
    FrameRecord rec;
    rec.frame_id = cols[0];
    rec.timestamp = detail::parse_csv_double(cols[1], "timestamp");
    rec.speed = detail::parse_csv_double(cols[2], "speed");
    rec.steering = deg2rad(detail::parse_csv_double(cols[3], "steering_deg"));
    rec.blinker_left = detail::parse_csv_bool(cols[4], "blinker_l");
    rec.blinker_right = detail::parse_csv_bool(cols[5], "blinker_r");
    std::string file = "frames/" + rec.frame_id + ".png";
    if (!fs::exists(dir / file))
      throw DataError("missing frame file " + (dir / file).string());
    files.push_back(file);
    log.frames.push_back(std::move(rec));
  }

  fs::path projcfg = dir / "projection.cfg";
  if (!fs::exists(projcfg)) throw DataError("missing projection config " + projcfg.string());
  log.spec = projection_from_config(ConfigDoc::parse_file(projcfg));

  fs::path trackcfg = dir / "track.cfg";
  if (fs::exists(trackcfg)) {
    std::ifstream tin(trackcfg);
    std::ostringstream ss;
    ss << tin.rdbuf();
    log.track_document = ss.str();
  }

  log.store = std::make_shared<DiskFrameStore>(dir, std::move(files));
  log.validate();

  // Frame dimensions must match the capture geometry; checking one frame
  // catches mismatched directories without decoding the whole log.
  Image first = log.frame_image(0);
  if (first.width != log.spec.width || first.height != log.spec.height)
    throw DataError("frame size does not match projection config in " + dir.string());
  return log;
}

inline void save_drive_log(const DriveLog& log, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  log.validate();
  if (!log.store) throw DataError("cannot save a drive log without frames");
  fs::create_directories(dir / "frames");

  std::ofstream out(dir / "manifest.csv");
  if (!out) throw DataError("cannot write " + (dir / "manifest.csv").string());
  out << kManifestHeader << "\n";
  for (const auto& f : log.frames) {
    out << f.frame_id << "," << ConfigDoc::format_double(f.timestamp) << ","
        << ConfigDoc::format_double(f.speed) << ","
        << ConfigDoc::format_double(rad2deg(f.steering)) << ","
        << (f.blinker_left ? 1 : 0) << "," << (f.blinker_right ? 1 : 0) << "\n";
  }
  out.close();

  ConfigDoc proj;
  projection_to_config(log.spec, proj);
  proj.save(dir / "projection.cfg");

  if (!log.track_document.empty()) {
    std::ofstream t(dir / "track.cfg");
    t << log.track_document;
  }

  for (size_t i = 0; i < log.frames.size(); ++i)
    write_png(dir / "frames" / (log.frames[i].frame_id + ".png"), log.store->load(i));
}

/// Drop frames around blinker activations (within `blinker_margin` seconds of
/// any active-blinker frame) and frames slower than `min_speed`.
inline DriveLog filter_frames(const DriveLog& log, double min_speed, double blinker_margin) {
  if (min_speed < 0.0 || blinker_margin < 0.0)
    throw DomainError("filter_frames: margins must be >= 0");
  const auto& fr = log.frames;
  std::vector<char> drop(fr.size(), 0);

  std::vector<double> active_times;
  for (size_t i = 0; i < fr.size(); ++i)
    if (fr[i].blinker_left || fr[i].blinker_right) active_times.push_back(fr[i].timestamp);

  for (size_t i = 0; i < fr.size(); ++i) {
    if (fr[i].speed < min_speed) {
      drop[i] = 1;
      continue;
    }
    if (active_times.empty()) continue;
    auto it = std::lower_bound(active_times.begin(), active_times.end(), fr[i].timestamp);
    double nearest = std::numeric_limits<double>::infinity();
    if (it != active_times.end()) nearest = std::min(nearest, *it - fr[i].timestamp);
    if (it != active_times.begin()) nearest = std::min(nearest, fr[i].timestamp - *std::prev(it));
    if (nearest <= blinker_margin) drop[i] = 1;
  }

  DriveLog out;
  out.spec = log.spec;
  out.track_document = log.track_document;
  std::vector<size_t> kept;
  for (size_t i = 0; i < fr.size(); ++i) {
    if (drop[i]) continue;
    kept.push_back(i);
    out.frames.push_back(fr[i]);
  }
  if (log.store)
    out.store = std::make_shared<SubsetFrameStore>(log.store, std::move(kept));
  return out;
}

/// Straight-bias resampling policy. Frames with |steering| at or below the
/// small threshold survive with probability keep_fraction_small; frames at or
/// above the large threshold are replicated round(oversample_factor_large)
/// times; everything in between is kept once.
struct SelectionPolicy {
  double small_angle_threshold = deg2rad(5.0);
  double keep_fraction_small = 1.0;
  double oversample_factor_large = 1.0;
  double large_angle_threshold = deg2rad(100.0);
  uint64_t seed = 0;

  void validate() const {
    if (!(small_angle_threshold > 0.0 && large_angle_threshold > 0.0))
      throw DomainError("selection: thresholds must be > 0");
    if (!(keep_fraction_small >= 0.0 && keep_fraction_small <= 1.0))
      throw DomainError("selection: keep_fraction_small must be in [0, 1]");
    if (!(oversample_factor_large >= 1.0))
      throw DomainError("selection: oversample_factor_large must be >= 1");
  }
};

inline void selection_to_config(const SelectionPolicy& p, ConfigDoc& doc) {
  doc.set_double("selection", "small_angle_threshold_deg", rad2deg(p.small_angle_threshold));
  doc.set_double("selection", "keep_fraction_small", p.keep_fraction_small);
  doc.set_double("selection", "oversample_factor_large", p.oversample_factor_large);
  doc.set_double("selection", "large_angle_threshold_deg", rad2deg(p.large_angle_threshold));
  doc.set("selection", "seed", std::to_string(p.seed));
}

inline SelectionPolicy selection_from_config(const ConfigDoc& doc, const SelectionPolicy& base = {}) {
  SelectionPolicy p = base;
  p.small_angle_threshold =
      deg2rad(doc.get_double("selection", "small_angle_threshold_deg", rad2deg(p.small_angle_threshold)));
  p.keep_fraction_small = doc.get_double("selection", "keep_fraction_small", p.keep_fraction_small);
  p.oversample_factor_large =
      doc.get_double("selection", "oversample_factor_large", p.oversample_factor_large);
  p.large_angle_threshold =
      deg2rad(doc.get_double("selection", "large_angle_threshold_deg", rad2deg(p.large_angle_threshold)));
  p.seed = doc.get_u64("selection", "seed", p.seed);
  p.validate();
  return p;
}

/// Multiset of selected frame indices, ascending, replicates adjacent.
/// The per-frame keep decision hashes (seed, index), so it is independent of
/// processing order and stable under sharding.
inline std::vector<size_t> select(const std::vector<FrameRecord>& frames,
                                  const SelectionPolicy& policy) {
  policy.validate();
  std::vector<size_t> out;
  long reps = std::lround(policy.oversample_factor_large);
  for (size_t i = 0; i < frames.size(); ++i) {
    double a = std::abs(frames[i].steering);
    if (a <= policy.small_angle_threshold) {
      double u = static_cast<double>(splitmix64(policy.seed ^ splitmix64(i)) >> 11) * 0x1.0p-53;
      if (u < policy.keep_fraction_small) out.push_back(i);
    } else if (a >= policy.large_angle_threshold) {
      for (long k = 0; k < reps; ++k) out.push_back(i);
    } else {
      out.push_back(i);
    }
  }
  return out;
}

struct DistributionStats {
  size_t count = 0;
  double stddev = 0.0;     // population std of steering, radians
  size_t small_count = 0;  // |steering| <= small_threshold
  double small_threshold = deg2rad(5.0);
  double bin_width = deg2rad(5.0);
  double bin_min = deg2rad(-112.5);  // outliers clamp into the end bins
  std::vector<size_t> histogram;
};

inline DistributionStats distribution_stats(const std::vector<double>& angles,
                                            double small_threshold = deg2rad(5.0)) {
  if (angles.empty()) throw DomainError("distribution_stats: empty input");
  DistributionStats st;
  st.count = angles.size();
  st.small_threshold = small_threshold;
  const int nbins = 45;
  st.histogram.assign(nbins, 0);
  double sum = 0.0;
  for (double a : angles) sum += a;
  double mean = sum / static_cast<double>(angles.size());
  double var = 0.0;
  for (double a : angles) {
    var += (a - mean) * (a - mean);
    if (std::abs(a) <= small_threshold) ++st.small_count;
    int bin = static_cast<int>(std::floor((a - st.bin_min) / st.bin_width));
    st.histogram[std::clamp(bin, 0, nbins - 1)]++;
  }
  st.stddev = std::sqrt(var / static_cast<double>(angles.size()));
  return st;
}

inline std::vector<double> steering_angles(const std::vector<FrameRecord>& frames) {
  std::vector<double> a(frames.size());
  for (size_t i = 0; i < frames.size(); ++i) a[i] = frames[i].steering;
  return a;
}

inline std::vector<double> steering_angles(const std::vector<FrameRecord>& frames,
                                           const std::vector<size_t>& multiset) {
  std::vector<double> a(multiset.size());
  for (size_t i = 0; i < multiset.size(); ++i) a[i] = frames.at(multiset[i]).steering;
  return a;
}

}  // namespace lanesim
