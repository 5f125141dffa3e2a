#include "egofields/benchmark.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "egofields/error.h"
#include "egofields/geometry.h"
#include "egofields/io_util.h"

namespace egofields {
namespace {

using ojson = nlohmann::ordered_json;

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Unbiased enough for shuffling and, unlike std distributions, identical on
// every standard library.
void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

double json_or_null(const std::optional<double>& v, ojson& slot) {
  if (v && std::isfinite(*v)) {
    slot = *v;
  } else {
    slot = nullptr;
  }
  return v.value_or(0.0);
}

}  // namespace

// ---- Split ----------------------------------------------------------------

std::vector<ActionSegment> parse_segments_csv(const std::string& text, const std::string& source) {
  std::vector<ActionSegment> out;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cols = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (cols.size() >= 4 && cols[0] == "video_id") continue;
    }
    if (cols.size() != 4) throw ParseError(source, line_no, "expected 4 columns");
    ActionSegment s;
    s.video_id = cols[0];
    try {
      std::size_t used = 0;
      s.start = std::stod(cols[1], &used);
      if (used != cols[1].size()) throw std::invalid_argument("trailing");
      s.stop = std::stod(cols[2], &used);
      if (used != cols[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(source, line_no, "invalid time value");
    }
    if (!(s.start < s.stop)) throw ParseError(source, line_no, "start must precede stop");
    s.verb = cols[3];
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ActionSegment> read_segments_csv(const std::filesystem::path& path) {
  return parse_segments_csv(read_text_file(path), path.string());
}

void SplitConfig::validate() const {
  if (!(exclusion_window >= 0.0)) throw InvalidArgument("exclusion_window must be >= 0");
  if (!(easy_fraction >= 0.0 && easy_fraction <= 1.0)) {
    throw InvalidArgument("easy_fraction must lie in [0,1]");
  }
  if (!ooa_eval_rate) throw InvalidArgument("ooa_eval_rate must be set explicitly");
  if (!(*ooa_eval_rate >= 0.0 && *ooa_eval_rate <= 1.0)) {
    throw InvalidArgument("ooa_eval_rate must lie in [0,1]");
  }
}

namespace {
constexpr std::pair<SplitLabel, std::string_view> kLabelNames[] = {
    {SplitLabel::kTrain, "train"},           {SplitLabel::kValHard, "val-hard"},
    {SplitLabel::kTestHard, "test-hard"},    {SplitLabel::kValMedium, "val-medium"},
    {SplitLabel::kTestMedium, "test-medium"}, {SplitLabel::kValEasy, "val-easy"},
    {SplitLabel::kTestEasy, "test-easy"},    {SplitLabel::kDiscarded, "discarded"},
};
}  // namespace

std::string_view split_label_name(SplitLabel label) {
  for (const auto& [l, n] : kLabelNames)
    if (l == label) return n;
  return "unknown";
}

SplitLabel parse_split_label(std::string_view name) {
  for (const auto& [l, n] : kLabelNames)
    if (n == name) return l;
  throw InvalidArgument(fmt::format("unknown split label '{}'", name));
}

bool is_eval_label(SplitLabel label) {
  return label != SplitLabel::kTrain && label != SplitLabel::kDiscarded;
}

bool imposes_exclusion(SplitLabel label) {
  return label == SplitLabel::kValHard || label == SplitLabel::kTestHard ||
         label == SplitLabel::kValMedium || label == SplitLabel::kTestMedium;
}

std::map<SplitLabel, std::size_t> SplitAssignment::counts() const {
  std::map<SplitLabel, std::size_t> out;
  for (const auto& [l, n] : kLabelNames) out[l] = 0;
  for (const auto& e : entries) ++out[e.label];
  return out;
}

std::optional<double> SplitAssignment::mean_eval_gap() const {
  std::vector<double> t;
  for (const auto& e : entries)
    if (is_eval_label(e.label)) t.push_back(e.timestamp);
  if (t.size() < 2) return std::nullopt;
  return (t.back() - t.front()) / static_cast<double>(t.size() - 1);
}

std::string SplitAssignment::to_csv() const {
  std::string out = "frame_name,label\n";
  for (const auto& e : entries) out += fmt::format("{},{}\n", e.frame, split_label_name(e.label));
  return out;
}

SplitAssignment generate_split(const std::vector<RegisteredFrame>& frames,
                               const std::vector<ActionSegment>& segments,
                               const std::optional<std::set<std::string>>& visor_frames,
                               const SplitConfig& config) {
  config.validate();
  SplitAssignment out;
  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return frames[a].timestamp < frames[b].timestamp;
  });
  for (std::size_t i : order) out.entries.push_back({frames[i].name, frames[i].timestamp, SplitLabel::kTrain});
  {
    std::set<std::string> names;
    for (const auto& e : out.entries) {
      if (!names.insert(e.frame).second) throw InvalidArgument("duplicate frame name " + e.frame);
    }
  }

  enum class Tier { kNone, kHard, kMedium, kEasy };
  std::vector<Tier> tier(out.entries.size(), Tier::kNone);
  std::vector<std::size_t> ooa;
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    const double t = out.entries[i].timestamp;
    bool in_any = false, in_hard = false;
    for (const auto& s : segments) {
      if (t >= s.start && t < s.stop) {
        in_any = true;
        in_hard = in_hard || config.hard_verbs.count(s.verb) > 0;
      }
    }
    if (in_hard && (!visor_frames || visor_frames->count(out.entries[i].frame) > 0)) {
      tier[i] = Tier::kHard;
    } else if (!in_any) {
      ooa.push_back(i);
    }
  }

  if (ooa.empty()) {
    out.warnings.push_back("no out-of-action frames; split has hard evaluation frames only");
  }
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> pool = ooa;
  shuffle(pool, rng);
  const auto n_eval = static_cast<std::size_t>(
      std::llround(*config.ooa_eval_rate * static_cast<double>(ooa.size())));
  pool.resize(n_eval);
  shuffle(pool, rng);
  const auto n_easy =
      static_cast<std::size_t>(std::llround(config.easy_fraction * static_cast<double>(n_eval)));
  for (std::size_t k = 0; k < pool.size(); ++k) tier[pool[k]] = k < n_easy ? Tier::kEasy : Tier::kMedium;

  bool next_val = true;
  std::vector<double> excluding;
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    if (tier[i] == Tier::kNone) continue;
    SplitLabel l;
    switch (tier[i]) {
      case Tier::kHard: l = next_val ? SplitLabel::kValHard : SplitLabel::kTestHard; break;
      case Tier::kMedium: l = next_val ? SplitLabel::kValMedium : SplitLabel::kTestMedium; break;
      default: l = next_val ? SplitLabel::kValEasy : SplitLabel::kTestEasy; break;
    }
    next_val = !next_val;
    out.entries[i].label = l;
    if (imposes_exclusion(l)) excluding.push_back(out.entries[i].timestamp);
  }

  // `excluding` is sorted because entries are in temporal order.
  for (auto& e : out.entries) {
    if (e.label != SplitLabel::kTrain) continue;
    auto it = std::lower_bound(excluding.begin(), excluding.end(), e.timestamp);
    bool near = false;
    if (it != excluding.end() && *it - e.timestamp < config.exclusion_window) near = true;
    if (it != excluding.begin() && e.timestamp - *std::prev(it) < config.exclusion_window) near = true;
    if (near) e.label = SplitLabel::kDiscarded;
  }
  return out;
}

// ---- UDOS -----------------------------------------------------------------

UdosVariants udos_mask_variants(const std::vector<FrameAnnotation>& annotations) {
  UdosVariants out;
  for (const auto& fa : annotations) {
    bool complete = true;
    for (const auto& o : fa.objects) {
      if (!o.contact || !o.moved || !o.body_part) {
        out.warnings.push_back(
            fmt::format("{}: object {} lacks contact/moved/body_part flags; frame skipped", fa.frame,
                        o.object_id));
        complete = false;
        break;
      }
      if (o.mask.width != fa.width || o.mask.height != fa.height) {
        throw InvalidArgument(fmt::format("{}: mask of object {} has the wrong size", fa.frame,
                                          o.object_id));
      }
    }
    if (!complete) continue;
    UdosMasks m{fa.frame,
                BinaryMask(fa.width, fa.height),
                BinaryMask(fa.width, fa.height),
                BinaryMask(fa.width, fa.height),
                {},
                {},
                {}};
    const auto paint = [](BinaryMask& dst, const BinaryMask& src) {
      for (std::size_t i = 0; i < src.bits.size(); ++i) dst.bits[i] |= src.bits[i];
    };
    for (const auto& o : fa.objects) {
      const bool in_a = *o.contact;
      const bool in_b = in_a || *o.moved;
      const bool in_c = in_b && !*o.body_part;
      if (in_a) {
        paint(m.dynamic, o.mask);
        m.ids_a.push_back(o.object_id);
      }
      if (in_b) {
        paint(m.dynamic_semi_static, o.mask);
        m.ids_b.push_back(o.object_id);
      }
      if (in_c) {
        paint(m.without_body_parts, o.mask);
        m.ids_c.push_back(o.object_id);
      }
    }
    out.frames.push_back(std::move(m));
  }
  return out;
}

std::vector<FrameAnnotation> read_annotations_json(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  if (!doc.is_object() || !doc.contains("frames") || !doc["frames"].is_array()) {
    throw SchemaError("/frames", "expected an array");
  }
  const auto base = path.parent_path();
  std::vector<FrameAnnotation> out;
  for (std::size_t i = 0; i < doc["frames"].size(); ++i) {
    const auto& jf = doc["frames"][i];
    const std::string fp = fmt::format("/frames/{}", i);
    FrameAnnotation fa;
    try {
      fa.frame = jf.at("frame").get<std::string>();
      fa.width = jf.at("width").get<int>();
      fa.height = jf.at("height").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(fp, e.what());
    }
    if (fa.width <= 0 || fa.height <= 0) throw SchemaError(fp, "non-positive size");
    const auto objects = jf.value("objects", nlohmann::json::array());
    for (std::size_t k = 0; k < objects.size(); ++k) {
      const auto& jo = objects[k];
      const std::string op = fmt::format("{}/objects/{}", fp, k);
      ObjectAnnotation o;
      try {
        o.object_id = jo.at("id").get<int>();
        o.mask = read_mask(base / jo.at("mask").get<std::string>(), o.object_id);
      } catch (const nlohmann::json::exception& e) {
        throw SchemaError(op, e.what());
      }
      for (const auto& [key, slot] : {std::pair{"contact", &o.contact}, std::pair{"moved", &o.moved},
                                      std::pair{"body_part", &o.body_part}}) {
        if (!jo.contains(key) || jo[key].is_null()) continue;
        if (!jo[key].is_boolean()) throw SchemaError(op + "/" + key, "expected boolean");
        *slot = jo[key].get<bool>();
      }
      fa.objects.push_back(std::move(o));
    }
    out.push_back(std::move(fa));
  }
  return out;
}

// ---- Reconstruction statistics -------------------------------------------

std::size_t orientation_bin(double degrees) {
  double d = std::fmod(degrees + 180.0, 360.0);
  if (d < 0) d += 360.0;
  // Bin k is centred on -180 + 10k.
  return static_cast<std::size_t>(std::floor((d + 5.0) / 10.0)) % 36;
}

ReconStats reconstruction_stats(const std::vector<NamedReconstruction>& recons,
                                const VerifyConfig& verify_cfg) {
  verify_cfg.validate();
  ReconStats out;
  out.accept_threshold = verify_cfg.accept_threshold;
  for (int k = 0; k < 20; ++k) out.registration_histogram.push_back({k * 0.05, (k + 1) * 0.05, 0});

  constexpr double kRad2Deg = 180.0 / 3.14159265358979323846;
  std::size_t max_points = 0;
  for (const auto& nr : recons) {
    if (!nr.recon) throw InvalidArgument("reconstruction_stats: null reconstruction");
    const Reconstruction& r = *nr.recon;
    ReconSummary s;
    s.name = nr.name;
    s.registered = r.registered_count();
    s.total = r.total_frame_count;
    s.points = r.points.size();
    if (s.total > 0) {
      const VerifyResult v = verify_counts(s.registered, s.total, verify_cfg);
      s.registration_rate = v.registration_rate;
      s.accepted = v.accept;
    }
    try {
      const ReprojectionStats rs = reprojection_stats(r);
      s.mean_reprojection_error = rs.mean;
      s.max_reprojection_error = rs.max;
    } catch (const InvalidArgument&) {
      // No tracks: error undefined.
    }
    if (!s.accepted) ++out.below_threshold;
    const std::size_t bin = std::min<std::size_t>(19, static_cast<std::size_t>(s.registration_rate * 20.0));
    ++out.registration_histogram[bin].count;
    max_points = std::max(max_points, s.points);
    out.recons.push_back(s);

    OrientationHistogram oh{nr.name, std::vector<std::size_t>(36, 0), std::vector<std::size_t>(36, 0),
                            std::vector<std::size_t>(36, 0)};
    if (!r.frames.empty()) {
      std::vector<Eigen::Quaterniond> qs;
      for (const auto& f : r.frames) qs.push_back(f.pose.rotation());
      const Eigen::Quaterniond ref = mean_rotation(qs);
      for (const auto& f : r.frames) {
        const EulerAngles e = relative_orientation(f.pose, ref);
        ++oh.pitch[orientation_bin(e.pitch * kRad2Deg)];
        ++oh.yaw[orientation_bin(e.yaw * kRad2Deg)];
        ++oh.roll[orientation_bin(e.roll * kRad2Deg)];
      }
    }
    out.orientations.push_back(std::move(oh));
  }
  double lo = 0.0, hi = 10.0;
  do {
    out.point_histogram.push_back({lo, hi, 0});
    lo = hi;
    hi *= 10.0;
  } while (lo <= static_cast<double>(max_points));
  for (const auto& s : out.recons) {
    for (auto& b : out.point_histogram) {
      if (static_cast<double>(s.points) >= b.lower && static_cast<double>(s.points) < b.upper) ++b.count;
    }
  }
  return out;
}

std::string ReconStats::summary_csv() const {
  std::string out = "name,registered,total,registration_rate,accepted,points,mean_reproj_px,max_reproj_px\n";
  const auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string(); };
  for (const auto& s : recons) {
    out += fmt::format("{},{},{},{:.6f},{},{},{},{}\n", s.name, s.registered, s.total,
                       s.registration_rate, s.accepted ? 1 : 0, s.points,
                       opt(s.mean_reprojection_error), opt(s.max_reprojection_error));
  }
  return out;
}

std::string ReconStats::orientation_csv() const {
  std::string out = "name,axis,bin_center_deg,count,log_count\n";
  for (const auto& oh : orientations) {
    for (const auto& [axis, bins] :
         {std::pair{"pitch", &oh.pitch}, std::pair{"yaw", &oh.yaw}, std::pair{"roll", &oh.roll}}) {
      for (std::size_t k = 0; k < 36; ++k) {
        const std::size_t c = (*bins)[k];
        out += fmt::format("{},{},{},{},{:.6f}\n", oh.name, axis, -180 + 10 * static_cast<int>(k), c,
                           std::log10(1.0 + static_cast<double>(c)));
      }
    }
  }
  return out;
}

std::string ReconStats::to_json() const {
  ojson doc;
  doc["accept_threshold"] = accept_threshold;
  doc["below_threshold"] = below_threshold;
  ojson rs = ojson::array();
  for (const auto& s : recons) {
    ojson j;
    j["name"] = s.name;
    j["registered"] = s.registered;
    j["total"] = s.total;
    j["registration_rate"] = s.registration_rate;
    j["accepted"] = s.accepted;
    j["points"] = s.points;
    json_or_null(s.mean_reprojection_error, j["mean_reprojection_error"]);
    json_or_null(s.max_reprojection_error, j["max_reprojection_error"]);
    rs.push_back(j);
  }
  doc["reconstructions"] = rs;
  const auto hist = [](const std::vector<HistogramBin>& bins) {
    ojson a = ojson::array();
    for (const auto& b : bins) a.push_back({{"lower", b.lower}, {"upper", b.upper}, {"count", b.count}});
    return a;
  };
  doc["registration_histogram"] = hist(registration_histogram);
  doc["point_histogram"] = hist(point_histogram);
  return doc.dump(2) + "\n";
}

// ---- Filtering study -----------------------------------------------------

std::optional<double> relative_change(double uniform, double ours) {
  if (ours == 0.0) return std::nullopt;
  return (uniform - ours) / ours;
}

std::string FilteringStudy::to_table() const {
  const auto err = [](const std::optional<double>& v) {
    return v ? fmt::format("{:.3f}", *v) : std::string("n/a");
  };
  const auto pct = [](const std::optional<double>& v) {
    return v ? fmt::format("{:.2f}%", 100.0 * *v) : std::string("n/a");
  };
  std::string out = "| Sampler | Frames | Points | Reproj. error (px) | Registered | Success |\n";
  out += "|---|---|---|---|---|---|\n";
  for (const StudyArm* a : {&ours, &uniform}) {
    out += fmt::format("| {} | {} | {} | {} | {:.3f} | {} |\n", a->sampler, a->kept, a->points,
                       err(a->reprojection_error), a->registration_rate, a->success ? "yes" : "no");
  }
  out += fmt::format("| Relative change | | {} | {} | | |\n", pct(points_change), pct(error_change));
  return out;
}

std::string FilteringStudy::to_json() const {
  ojson doc;
  for (const StudyArm* a : {&ours, &uniform}) {
    ojson j;
    j["kept"] = a->kept;
    j["points"] = a->points;
    json_or_null(a->reprojection_error, j["reprojection_error"]);
    j["registration_rate"] = a->registration_rate;
    j["success"] = a->success;
    j["attempts"] = a->attempts;
    doc[a->sampler] = j;
  }
  json_or_null(points_change, doc["points_change"]);
  json_or_null(error_change, doc["error_change"]);
  return doc.dump(2) + "\n";
}

FilteringStudy filtering_study(const FrameSource& frames, SfmBackend& backend,
                               const OrchestrateConfig& config, const FilterStep& ours) {
  const FilterStep ours_step = ours ? ours : FilterStep([&](double t) {
    return filter_frames(frames, config.filter.with_threshold(t), config.threads);
  });

  const auto run = [&](const std::string& name, const FilterStep& step) {
    OrchestrateConfig c = config;
    c.workdir = config.workdir / name;
    const OrchestrateResult res = orchestrate(frames, backend, c, step);
    StudyArm arm;
    arm.sampler = name;
    // Read back rather than trust the last filter call: the run may resume.
    const auto kept_file = c.workdir / fmt::format("attempt{}", res.state.attempt) / "kept.txt";
    std::istringstream is(read_text_file(kept_file));
    std::string line;
    while (std::getline(is, line))
      if (!line.empty()) ++arm.kept;
    arm.points = res.recon.points.size();
    try {
      arm.reprojection_error = reprojection_stats(res.recon).mean;
    } catch (const InvalidArgument&) {
      // No tracks.
    }
    arm.registration_rate = res.state.registration_rate;
    arm.success = res.state.stage == Stage::kAccepted;
    arm.attempts = res.state.attempt;
    return arm;
  };

  FilteringStudy out;
  out.ours = run("ours", ours_step);
  // Uniform gets the frame count of our final attempt on every attempt, so a
  // restart cannot buy it a larger budget.
  const std::size_t budget = std::max<std::size_t>(1, out.ours.kept);
  out.uniform = run("uniform", [&](double) { return compare_uniform(frames.size(), budget); });
  out.points_change = relative_change(static_cast<double>(out.uniform.points),
                                      static_cast<double>(out.ours.points));
  if (out.ours.reprojection_error && out.uniform.reprojection_error) {
    out.error_change = relative_change(*out.uniform.reprojection_error, *out.ours.reprojection_error);
  }
  return out;
}

}  // namespace egofields
