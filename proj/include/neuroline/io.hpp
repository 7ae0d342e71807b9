#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "neuroline/augment.hpp"
#include "neuroline/calibration.hpp"
#include "neuroline/decoder.hpp"
#include "neuroline/sim.hpp"

namespace neuroline::io {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

/// Every stream and document starts with (or contains) a
/// {"format": "...", "version": 1} header; a version mismatch is an explicit
/// migration error, never a silent reinterpretation.
json make_header(const std::string& format);
void check_header(const json& header, const std::string& format);

// --------------------------------------------------------------------------
// FrameRecord: {"t": <ms>, "pow": [70 values, channel-major AF3..AF4 x
// theta..gamma]}.

json frame_to_json(const signal::PowerFrame& frame);
/// Strict mode rejects unknown keys, wrong arity, negative or non-finite
/// powers; lenient parsing is handled by callers skipping failed lines.
signal::PowerFrame frame_from_json(const json& j, bool strict);

std::string frame_to_line(const signal::PowerFrame& frame);
signal::PowerFrame frame_from_line(const std::string& line, bool strict);

std::vector<signal::PowerFrame> read_frames(std::istream& in, bool strict,
                                            std::size_t* skipped = nullptr);
void write_frames(std::ostream& out,
                  std::span<const signal::PowerFrame> frames);

// --------------------------------------------------------------------------
// TwistRecord: geometry_msgs/Twist field layout with only linear.x nonzero,
// paired with the command timestamp.

json twist_to_json(std::int64_t t_ms, double linear_x);

// --------------------------------------------------------------------------
// Decisions.

json decision_to_json(const decoder::Decision& d);
decoder::Decision decision_from_json(const json& j);

// --------------------------------------------------------------------------
// Profile file (versioned, self-describing; GAN nets live in a sidecar).

struct Provenance {
  std::optional<std::uint64_t> seed;
  std::string tool_version;

  bool operator==(const Provenance&) const = default;
};

struct ProfileFile {
  calibration::UserProfile profile;
  Provenance provenance;

  bool operator==(const ProfileFile&) const = default;
};

json profile_to_json(const ProfileFile& file);
ProfileFile profile_from_json(const json& j);

void save_profile(const std::string& path, const ProfileFile& file);
ProfileFile load_profile(const std::string& path);

/// Sidecar path for trained GAN nets: <profile path>.gan-<mode>.json
std::string gan_sidecar_path(const std::string& profile_path,
                             augment::LossMode mode);
json mlp_to_json(const augment::MlpNet& net);
augment::MlpNet mlp_from_json(const json& j);
void save_gan(const std::string& path, const augment::TrainedGan& gan,
              const augment::GanConfig& config);

// --------------------------------------------------------------------------
// Trials file: header line {"format": "neuroline-trials", ...,
// "trial_duration_ms": N}, then one JSON object per trial.

void write_trials(std::ostream& out, const calibration::TrialSet& set);
calibration::TrialSet read_trials(std::istream& in, bool strict);

// --------------------------------------------------------------------------
// Synthetic-user spec (single JSON document).

json user_to_json(const sim::SyntheticUser& user);
sim::SyntheticUser user_from_json(const json& j);
sim::SyntheticUser load_user(const std::string& path);

// --------------------------------------------------------------------------
// Misc documents.

json dist_to_json(const stats::DistFamily& d);
stats::DistFamily dist_from_json(const json& j);

json shape_stats_to_json(const stats::ShapeStats& s);

/// Histogram-ready bins: {edges: [...], counts: [...]}.
json histogram_json(std::span<const double> values, int bins);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace neuroline::io
