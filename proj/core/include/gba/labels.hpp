#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gba/classes.hpp"
#include "gba/patch_engine.hpp"
#include "gba/scene_sim.hpp"

namespace gba {

struct LabelParams {
  std::uint32_t minSupport = 10;     // distinct labeled MTS keys
  double minConfidence = 0.995;      // majority-class fraction
  double unlabeledThreshold = 0.03;  // present a frame only above this

  /// "key = value" lines: min_support, min_confidence, unlabeled_threshold.
  static LabelParams parse(std::string_view text);
  std::string to_text() const;
  bool operator==(const LabelParams&) const = default;
};

struct RuleItem {
  ResourceKind kind = ResourceKind::Mesh;
  PersistentKey key;
  auto operator<=>(const RuleItem&) const = default;
};

/// One or two resources of an MTS key; pairs are stored in component order.
struct Antecedent {
  RuleItem first;
  std::optional<RuleItem> second;

  auto operator<=>(const Antecedent&) const = default;
  std::size_t size() const { return second ? 2 : 1; }
  std::string describe() const;
};

/// The six antecedents an MTS key can match: {m}, {t}, {s}, {m,t}, {m,s}, {t,s}.
std::array<Antecedent, 6> antecedents_of(const MtsKey& key);

struct AssociationRule {
  Antecedent antecedent;
  ClassId consequent = kUnlabeled;
  std::uint32_t support = 0;      // at creation
  double confidence = 0.0;        // at creation
  std::uint64_t createdAtClick = 0;  // click-log length when the rule was created
  bool operator==(const AssociationRule&) const = default;
};

enum class ClickKind : std::uint8_t { Label = 0, Undo = 1 };

struct ClickRecord {
  std::uint64_t sequence = 0;
  MtsKey key;
  ClassId cls = kUnlabeled;  // kUnlabeled clears the key (undo of a first label)
  std::int64_t timestamp = 0;
  ClickKind kind = ClickKind::Label;
  bool operator==(const ClickRecord&) const = default;

  /// "sequence mtsHex classId timestamp L|U"
  std::string to_line() const;
  static std::optional<ClickRecord> from_line(std::string_view line);
};

enum class Provenance : std::uint8_t { Unlabeled = 0, ExplicitMts = 1, Rule = 2 };

struct RuleMatch {
  enum class Kind : std::uint8_t { None, Unique, Conflict } kind = Kind::None;
  ClassId cls = kUnlabeled;
};

struct PatchLabel {
  Provenance provenance = Provenance::Unlabeled;
  ClassId cls = kUnlabeled;
  bool conflict = false;  // two or more matching rules disagree
};

/// MTS labels, mined rules and the append-only click log they derive from.
class LabelStore {
 public:
  explicit LabelStore(LabelParams params = {}) : params_(params) {}

  /// Appends a click and updates the MTS label (last write wins). Throws
  /// UnknownClass for ids outside the palette (or kUnlabeled on a Label
  /// click) and UnknownMts for keys absent from the index.
  void apply_label(const MtsIndex& index, const Palette& palette, const MtsKey& key, ClassId cls,
                   std::int64_t timestamp = 0, ClickKind kind = ClickKind::Label);

  /// Recomputes qualifying antecedents from the current MTS labels: new ones
  /// become rules stamped with the current click position, rules no longer
  /// qualifying (or now pointing at another class) are retracted. A pair is
  /// skipped when one of its singletons already qualifies for the same
  /// class. Returns the number of rules created.
  std::size_t mine_rules();

  std::optional<ClassId> label_of(const MtsKey& key) const;
  RuleMatch rule_match(const MtsKey& key) const;
  /// Explicit label first, then a unique rule; conflicting rules leave the
  /// patch unlabeled and flagged.
  PatchLabel resolve(const MtsKey& key) const;

  const LabelParams& params() const noexcept { return params_; }
  const std::map<MtsKey, ClassId>& mts_labels() const noexcept { return mtsLabels_; }
  const std::map<Antecedent, AssociationRule>& rules() const noexcept { return rules_; }
  /// Every rule ever created, in creation order.
  const std::vector<AssociationRule>& rule_history() const noexcept { return history_; }
  std::size_t retracted_count() const noexcept { return retracted_; }
  const std::vector<ClickRecord>& click_log() const noexcept { return clickLog_; }

  /// Rebuilds a store from a click log. Rules are mined after the records
  /// whose positions (1-based click counts) appear in `minePoints`.
  static LabelStore replay(LabelParams params, const MtsIndex& index, const Palette& palette,
                           std::span<const ClickRecord> log, std::span<const std::uint64_t> minePoints);

 private:
  LabelParams params_;
  std::map<MtsKey, ClassId> mtsLabels_;
  std::map<Antecedent, AssociationRule> rules_;
  std::vector<AssociationRule> history_;
  std::vector<ClickRecord> clickLog_;
  std::size_t retracted_ = 0;
};

/// Whether `majority` out of `support` meets the confidence threshold.
bool meets_confidence(std::uint32_t majority, std::uint32_t support, double minConfidence);

// ---------------------------------------------------------------------------

struct Coverage {
  std::uint64_t annotatable = 0;  // non-background pixels
  std::uint64_t explicitPixels = 0;
  std::uint64_t rulePixels = 0;
  std::uint64_t conflictPixels = 0;

  std::uint64_t labeled() const { return explicitPixels + rulePixels; }
  /// Labeled share of the annotatable area; 1 for a frame with nothing to label.
  double covered_fraction() const { return annotatable ? double(labeled()) / double(annotatable) : 1.0; }
  double unlabeled_fraction() const { return 1.0 - covered_fraction(); }
};

Coverage frame_coverage(const FramePatches& frame, const LabelStore& store);

struct PreAnnotation {
  std::uint32_t frameIndex = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<ClassId> labelMap;        // kUnlabeled where unlabeled or background
  std::vector<Provenance> provenance;
  std::vector<MtsKey> conflicts;        // patches held back by disagreeing rules
  Coverage coverage;
  double coveredFraction = 0.0;
};

PreAnnotation pre_annotate(const FramePatches& frame, const LabelStore& store);

// ---------------------------------------------------------------------------

struct FrameCheck {
  std::uint32_t frameIndex = 0;
  double preAnnotated = 0.0;       // covered fraction when the scheduler reached the frame
  bool presented = false;
  std::uint64_t clickPosition = 0;  // click-log length at the check
  bool operator==(const FrameCheck&) const = default;
};

/// Walks frames in sequence order and presents those whose unlabeled
/// fraction exceeds the threshold; every frame is checked exactly once.
class Scheduler {
 public:
  /// Next frame to present (position in corpus), or nullopt when done.
  /// Frames passed over are recorded as skipped.
  std::optional<std::size_t> next_frame(const Corpus& corpus, const LabelStore& store);

  const std::vector<FrameCheck>& checks() const noexcept { return checks_; }
  std::size_t cursor() const noexcept { return cursor_; }

 private:
  std::size_t cursor_ = 0;
  std::vector<FrameCheck> checks_;
};

/// Oracle class of each patch: the most frequent oracle class over its
/// pixels, lowest id on ties. Indexed [corpus position][patch position].
using PatchTruth = std::vector<std::vector<ClassId>>;
PatchTruth patch_truth(const Corpus& corpus, std::span<const OracleFrame> oracle);

struct PresentedFrame {
  std::uint32_t frameIndex = 0;
  std::uint64_t clickBegin = 0;  // click-log range produced on this frame
  std::uint64_t clickEnd = 0;
  std::uint64_t handLabeledPixels = 0;
  bool operator==(const PresentedFrame&) const = default;
};

struct AnnotationRun {
  LabelStore store;
  std::vector<FrameCheck> checks;
  std::vector<PresentedFrame> presented;

  /// Mining points to feed LabelStore::replay.
  std::vector<std::uint64_t> mine_points() const;
};

/// Scripted stand-in for the human: for every presented frame, labels each
/// patch that is not pre-labeled with its oracle class (patches in key
/// order), then mines rules.
AnnotationRun simulate_annotator(const Corpus& corpus, const PatchTruth& truth, const Palette& palette,
                                 LabelParams params);

/// Schedule file: one line per check, "frameIndex preAnnotated presented clickBegin clickEnd".
std::string schedule_to_text(const AnnotationRun& run);
/// Restores checks and presented frames (the store is rebuilt separately).
void schedule_from_text(std::string_view text, std::vector<FrameCheck>& checks, std::vector<PresentedFrame>& presented);

std::string click_log_to_text(std::span<const ClickRecord> log);
std::vector<ClickRecord> click_log_from_text(std::string_view text);

std::string rules_to_text(const LabelStore& store);

// ---------------------------------------------------------------------------

struct LabelMap {
  std::uint32_t frameIndex = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<ClassId> ids;
  bool operator==(const LabelMap&) const = default;
};

LabelMap export_label_map(const FramePatches& frame, const LabelStore& store);
Bytes encode_pgm(const LabelMap& map);
LabelMap decode_pgm(std::span<const std::uint8_t> bytes);

}  // namespace gba
