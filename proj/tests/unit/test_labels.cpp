#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "gba/errors.hpp"
#include "gba/labels.hpp"
#include "oracles.hpp"

using namespace gba;
using gba::testing::mts;

namespace {

const Palette& palette() {
  static const Palette p = Palette::default_palette();
  return p;
}

std::string n(const char* stem, int i) { return stem + std::to_string(i); }

// Keys sharing `mesh`, each with its own texture and shader.
std::vector<MtsKey> mesh_family(const std::string& mesh, int count, int offset = 0) {
  std::vector<MtsKey> out;
  for (int i = offset; i < offset + count; ++i) out.push_back(mts(mesh, n("t", i), n("s", i)));
  return out;
}

Corpus one_frame(const std::vector<MtsKey>& keys) { return gba::testing::synthetic_corpus({keys}); }

void label_all(LabelStore& store, const Corpus& c, const std::vector<MtsKey>& keys, ClassId cls) {
  for (const MtsKey& k : keys) store.apply_label(c.index, palette(), k, cls);
}

std::map<Antecedent, ClassId> rule_classes(const LabelStore& s) {
  std::map<Antecedent, ClassId> out;
  for (const auto& [a, r] : s.rules()) out[a] = r.consequent;
  return out;
}

std::map<Antecedent, ClassId> rule_classes(const std::map<Antecedent, oracle::Rule>& rules) {
  std::map<Antecedent, ClassId> out;
  for (const auto& [a, r] : rules) out[a] = r.cls;
  return out;
}

}  // namespace

TEST_SUITE("label_propagation") {

TEST_CASE("label semantics") {
  const auto keys = mesh_family("m", 3);
  const Corpus c = one_frame(keys);
  LabelStore s;
  s.apply_label(c.index, palette(), keys[0], classes::Car, 1);
  s.apply_label(c.index, palette(), keys[0], classes::Tree, 2);
  CHECK(s.label_of(keys[0]) == classes::Tree);
  CHECK(s.click_log().size() == 2);
  CHECK(s.click_log()[1].sequence == 1);
  s.apply_label(c.index, palette(), keys[0], kUnlabeled, 3, ClickKind::Undo);
  CHECK_FALSE(s.label_of(keys[0]));

  CHECK_THROWS_AS(s.apply_label(c.index, palette(), keys[1], 12), UnknownClass);
  CHECK_THROWS_AS(s.apply_label(c.index, palette(), keys[1], kUnlabeled), UnknownClass);
  CHECK_THROWS_AS(s.apply_label(c.index, palette(), mts("x", "y", "z"), classes::Car), UnknownMts);
  CHECK(s.click_log().size() == 3);
}

TEST_CASE("antecedents of a key") {
  const MtsKey k = mts("m", "t", "s");
  const auto a = antecedents_of(k);
  std::set<Antecedent> distinct(a.begin(), a.end());
  CHECK(distinct.size() == 6);
  CHECK(a[0].size() == 1);
  CHECK(a[5].size() == 2);
  CHECK(a[0].first.key == k.mesh);
  CHECK_FALSE(a[3].describe().empty());
}

TEST_CASE("confidence threshold") {
  CHECK(meets_confidence(199, 200, 0.995));
  CHECK_FALSE(meets_confidence(198, 200, 0.995));
  CHECK(meets_confidence(10, 10, 0.995));
  CHECK_FALSE(meets_confidence(0, 0, 0.5));
}

TEST_CASE("mining") {
  SUBCASE("a mesh shared by 30 car keys") {
    const auto keys = mesh_family("car", 30);
    const Corpus c = one_frame(keys);
    LabelStore s;
    label_all(s, c, keys, classes::Car);
    CHECK(s.mine_rules() == 1);
    REQUIRE(s.rules().size() == 1);
    const AssociationRule& r = s.rules().begin()->second;
    CHECK(r.antecedent == antecedents_of(keys[0])[0]);
    CHECK(r.consequent == classes::Car);
    CHECK(r.support == 30);
    CHECK(r.confidence == 1.0);
    CHECK(s.mine_rules() == 0);
  }
  SUBCASE("too little support") {
    const auto keys = mesh_family("car", 6);
    const Corpus c = one_frame(keys);
    LabelStore s;
    label_all(s, c, keys, classes::Car);
    CHECK(s.mine_rules() == 0);
    CHECK(s.rules().empty());
  }
  SUBCASE("a texture split 20:5 between classes") {
    std::vector<MtsKey> cars, trees;
    for (int i = 0; i < 20; ++i) cars.push_back(mts(n("cm", i), "shared", n("cs", i)));
    for (int i = 0; i < 5; ++i) trees.push_back(mts(n("tm", i), "shared", n("ts", i)));
    auto all = cars;
    all.insert(all.end(), trees.begin(), trees.end());
    const Corpus c = one_frame(all);
    LabelStore s;
    label_all(s, c, cars, classes::Car);
    label_all(s, c, trees, classes::Tree);
    s.mine_rules();
    CHECK(s.rules().empty());
  }
  SUBCASE("the rule appears exactly at the tenth click") {
    const auto keys = mesh_family("car", 12);
    const Corpus c = one_frame(keys);
    LabelStore s;
    for (int i = 0; i < 12; ++i) {
      s.apply_label(c.index, palette(), keys[i], classes::Car);
      s.mine_rules();
      CHECK(s.rules().size() == (i + 1 >= 10 ? 1u : 0u));
    }
    CHECK(s.rules().begin()->second.createdAtClick == 10);
    CHECK(s.rules().begin()->second.support == 10);
  }
  SUBCASE("pairs implied by a singleton are not stored") {
    // Ten keys share mesh and texture: {m} and {t} qualify, {m,t} is redundant.
    std::vector<MtsKey> keys;
    for (int i = 0; i < 10; ++i) keys.push_back(mts("m", "t", n("s", i)));
    const Corpus c = one_frame(keys);
    LabelStore s;
    label_all(s, c, keys, classes::Sign);
    s.mine_rules();
    CHECK(s.rules().size() == 2);
    for (const auto& [a, r] : s.rules()) CHECK(a.size() == 1);
  }
  SUBCASE("a pair can qualify where its singletons do not") {
    std::vector<MtsKey> keys;
    for (int i = 0; i < 10; ++i) keys.push_back(mts("m", "t", n("s", i)));
    std::vector<MtsKey> noise{mts("m", "x", "y"), mts("z", "t", "w")};
    auto all = keys;
    all.insert(all.end(), noise.begin(), noise.end());
    const Corpus c = one_frame(all);
    LabelStore s;
    label_all(s, c, keys, classes::Sign);
    s.apply_label(c.index, palette(), noise[0], classes::Pole);
    s.apply_label(c.index, palette(), noise[1], classes::Fence);
    s.mine_rules();
    REQUIRE(s.rules().size() == 1);
    CHECK(s.rules().begin()->first.size() == 2);
  }
}

TEST_CASE("mining agrees with exhaustive enumeration on random label sets") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<MtsKey> keys;
    for (int i = 0; i < 120; ++i)
      keys.push_back(mts(n("m", rng() % 8), n("t", rng() % 12), n("s", rng() % 5)));
    const Corpus c = one_frame(keys);
    LabelStore s;
    std::map<MtsKey, ClassId> labels;
    for (const MtsKey& k : keys) {
      // Class mostly follows the mesh, with occasional noise.
      ClassId cls = static_cast<ClassId>(1 + (k.mesh.h1 % 11));
      if (rng() % 40 == 0) cls = static_cast<ClassId>(1 + rng() % 11);
      s.apply_label(c.index, palette(), k, cls);
      labels[k] = cls;
    }
    s.mine_rules();
    CHECK(s.mts_labels() == labels);
    CHECK(rule_classes(s) == rule_classes(oracle::mine(labels, s.params())));
  }
}

TEST_CASE("resolution and coverage") {
  auto cars = mesh_family("car", 10);
  const MtsKey relabeled = mts("car", "other", "other");
  const MtsKey treeTex = mts("trunk", "bark", "leafy");
  auto trees = std::vector<MtsKey>{};
  for (int i = 0; i < 10; ++i) trees.push_back(mts(n("tm", i), "bark", n("ts", i)));
  const MtsKey both = mts("car", "bark", "fresh");
  auto all = cars;
  all.insert(all.end(), trees.begin(), trees.end());
  all.insert(all.end(), {relabeled, treeTex, both});
  const Corpus c = one_frame(all);

  LabelStore s;
  label_all(s, c, cars, classes::Car);
  label_all(s, c, trees, classes::Tree);
  s.apply_label(c.index, palette(), relabeled, classes::Sign);
  s.mine_rules();
  // {car} has 11 supporters with 10 Car: 0.909 < 0.995, so no mesh rule yet.
  CHECK(s.rule_match(both).kind == RuleMatch::Kind::Unique);
  CHECK(s.resolve(both).cls == classes::Tree);

  s.apply_label(c.index, palette(), relabeled, classes::Car);
  s.mine_rules();
  SUBCASE("explicit label beats rules") {
    const PatchLabel p = s.resolve(relabeled);
    CHECK(p.provenance == Provenance::ExplicitMts);
    CHECK(p.cls == classes::Car);
  }
  SUBCASE("unique rule") {
    const PatchLabel p = s.resolve(treeTex);
    CHECK(p.provenance == Provenance::Rule);
    CHECK(p.cls == classes::Tree);
  }
  SUBCASE("conflicting rules leave the patch unlabeled and flagged") {
    CHECK(s.rule_match(both).kind == RuleMatch::Kind::Conflict);
    const PatchLabel p = s.resolve(both);
    CHECK(p.provenance == Provenance::Unlabeled);
    CHECK(p.cls == kUnlabeled);
    CHECK(p.conflict);
  }
  SUBCASE("rules are retracted when confidence drops") {
    const std::size_t before = s.rules().size();
    s.apply_label(c.index, palette(), cars[0], classes::Pole);
    s.mine_rules();
    CHECK(s.rules().size() == before - 1);
    CHECK(s.retracted_count() == 1);
    CHECK(s.resolve(both).cls == classes::Tree);
    CHECK(s.rule_history().size() == before + 0);
  }
}

TEST_CASE("frame coverage") {
  const auto keys = mesh_family("k", 5);
  const Corpus c = one_frame(keys);
  LabelStore s;
  CHECK(frame_coverage(c.frames[0], s).covered_fraction() == 0.0);
  s.apply_label(c.index, palette(), keys[1], classes::Road);
  s.apply_label(c.index, palette(), keys[3], classes::Road);
  const Coverage cov = frame_coverage(c.frames[0], s);
  CHECK(cov.annotatable == 50);
  CHECK(cov.explicitPixels == 20);
  CHECK(cov.covered_fraction() == doctest::Approx(0.4));
  const PreAnnotation pre = pre_annotate(c.frames[0], s);
  CHECK(pre.labelMap[10] == classes::Road);
  CHECK(pre.labelMap[0] == kUnlabeled);
  CHECK(pre.provenance[30] == Provenance::ExplicitMts);

  FramePatches empty;
  empty.width = 3;
  empty.height = 1;
  CHECK(frame_coverage(empty, s).covered_fraction() == 1.0);
}

TEST_CASE("scheduler threshold") {
  // Frame 0: 971 + 29 pixels, frame 1: 969 + 31, sharing the large key.
  const MtsKey big = mts("big", "big", "big");
  const MtsKey a = mts("a", "a", "a"), b = mts("b", "b", "b");
  std::vector<FramePatches> frames(2);
  frames[0] = {0, 1000, 1, {{0, a, {{0, 29}}, 29}, {0, big, {{29, 971}}, 971}}};
  frames[1] = {1, 1000, 1, {{1, b, {{0, 31}}, 31}, {1, big, {{31, 969}}, 969}}};
  const Corpus c = make_corpus(frames);
  LabelStore s;
  s.apply_label(c.index, palette(), big, classes::Road);
  Scheduler sch;
  CHECK(sch.next_frame(c, s) == 1u);
  CHECK_FALSE(sch.next_frame(c, s));
  REQUIRE(sch.checks().size() == 2);
  CHECK_FALSE(sch.checks()[0].presented);
  CHECK(sch.checks()[0].preAnnotated == doctest::Approx(0.971));
  CHECK(sch.checks()[1].presented);
}

TEST_CASE("scripted annotation matches the independent schedule oracle") {
  auto check = [](const gba::testing::SimCorpus& sim) {
    const AnnotationRun run = simulate_annotator(sim.corpus, sim.truth, palette(), {});
    const oracle::ScheduleResult ref = oracle::schedule(sim.corpus, sim.truth, {});
    std::vector<std::uint32_t> presented;
    std::uint64_t hand = 0;
    for (const PresentedFrame& p : run.presented) {
      presented.push_back(p.frameIndex);
      hand += p.handLabeledPixels;
    }
    CHECK(presented == ref.presented);
    CHECK(run.store.click_log().size() == ref.clicks);
    CHECK(hand == ref.handLabeled);
    CHECK(run.store.mts_labels() == ref.labels);
    CHECK(rule_classes(run.store) == rule_classes(ref.rules.active));
    for (const auto& [a, r] : run.store.rules()) CHECK(r.createdAtClick == ref.rules.createdAt.at(a));
    REQUIRE(run.checks.size() == ref.reached.size());
    for (std::size_t i = 0; i < run.checks.size(); ++i)
      CHECK(run.checks[i].preAnnotated == doctest::Approx(ref.reached[i]).epsilon(1e-12));
    CHECK(oracle::truth(sim.corpus, sim.session.oracle) == sim.truth);
    return run;
  };
  check(gba::testing::small_corpus());
  const AnnotationRun run = check(gba::testing::default_corpus());
  const auto& sim = gba::testing::default_corpus();
  CHECK(run.store.click_log().size() <= sim.corpus.index.byMts.size());
  CHECK(run.presented.size() < sim.corpus.frames.size());
  CHECK(run.store.click_log().size() == run.store.mts_labels().size());

  SUBCASE("replaying the log rebuilds the store") {
    const LabelStore again =
        LabelStore::replay({}, sim.corpus.index, palette(), run.store.click_log(), run.mine_points());
    CHECK(again.mts_labels() == run.store.mts_labels());
    CHECK(again.rules() == run.store.rules());
    CHECK(again.rule_history() == run.store.rule_history());
  }
  SUBCASE("a prefix replay equals the labels after that many clicks") {
    const auto& log = run.store.click_log();
    const std::size_t k = log.size() / 2;
    const LabelStore prefix = LabelStore::replay({}, sim.corpus.index, palette(), std::span(log).first(k), {});
    std::map<MtsKey, ClassId> expected;
    for (std::size_t i = 0; i < k; ++i) expected[log[i].key] = log[i].cls;
    CHECK(prefix.mts_labels() == expected);
  }
  SUBCASE("schedule text round trip") {
    std::vector<FrameCheck> checks;
    std::vector<PresentedFrame> presented;
    schedule_from_text(schedule_to_text(run), checks, presented);
    CHECK(checks.size() == run.checks.size());
    CHECK(presented.size() == run.presented.size());
    for (std::size_t i = 0; i < presented.size(); ++i) {
      CHECK(presented[i].frameIndex == run.presented[i].frameIndex);
      CHECK(presented[i].clickBegin == run.presented[i].clickBegin);
      CHECK(presented[i].clickEnd == run.presented[i].clickEnd);
    }
  }
}

TEST_CASE("text formats") {
  SUBCASE("params") {
    LabelParams p;
    p.minSupport = 4;
    p.minConfidence = 0.9;
    p.unlabeledThreshold = 0.1;
    CHECK(LabelParams::parse(p.to_text()) == p);
    CHECK(LabelParams::parse("min_support = 3\n").minSupport == 3);
    CHECK_THROWS_AS(LabelParams::parse("support = 3\n"), Error);
    CHECK_THROWS_AS(LabelParams::parse("min_confidence = 2\n"), Error);
  }
  SUBCASE("click log") {
    const MtsKey k = mts("m", "t", "s");
    std::vector<ClickRecord> log{{0, k, classes::Car, 1700000000123, ClickKind::Label},
                                 {1, k, kUnlabeled, 1700000000456, ClickKind::Undo}};
    const std::string text = click_log_to_text(log);
    CHECK(click_log_from_text(text) == log);
    CHECK(click_log_from_text(text + "2 " + k.hex().substr(0, 20)) == log);
    CHECK(log[0].to_line() == "0 " + k.hex() + " 4 1700000000123 L");
    CHECK_FALSE(ClickRecord::from_line("1 zz 4 0 L"));
    CHECK_FALSE(ClickRecord::from_line("1 " + k.hex() + " 4 0 X"));
    CHECK_THROWS_AS(click_log_from_text("garbage line\n"), Error);
  }
  SUBCASE("label map pgm") {
    const auto& sim = gba::testing::small_corpus();
    const AnnotationRun run = simulate_annotator(sim.corpus, sim.truth, palette(), {});
    const LabelMap map = export_label_map(sim.corpus.frames[5], run.store);
    CHECK(map.ids.size() == sim.corpus.frames[5].pixel_count());
    CHECK(decode_pgm(encode_pgm(map)) == LabelMap{0, map.width, map.height, map.ids});
    CHECK_FALSE(rules_to_text(run.store).empty());
  }
}

}  // TEST_SUITE
