#include <cfloat>
#include <cmath>
#include <random>

#include "conseg/morphology.hpp"
#include "conseg/preprocess.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace conseg;

TEST_CASE("normalize_intensity rescales endpoints exactly") {
  SUBCASE("midpoint of the range lands on the midpoint") {
    Volume v = make_volume({3, 1, 1});
    v.data() << 0.0f, 250.0f, 500.0f;
    const Volume out = normalize_intensity(v, 0.0f, 1000.0f);
    CHECK(out.data()[0] == 0.0f);
    CHECK(out.data()[1] == 500.0f);
    CHECK(out.data()[2] == 1000.0f);
    CHECK(out.kind == ValueKind::Intensity);
  }
  SUBCASE("extrema always hit lo and hi exactly") {
    std::mt19937_64 rng(301);
    const Volume v = testutil::random_intensity({9, 8, 7}, -350.0f, 1200.0f, rng);
    const Volume out = normalize_intensity(v, 2.5f, 97.25f);
    CHECK(out.data().minCoeff() == 2.5f);
    CHECK(out.data().maxCoeff() == 97.25f);
  }
  SUBCASE("renormalizing is stable to float rounding") {
    std::mt19937_64 rng(302);
    const Volume v = testutil::random_intensity({8, 8, 8}, 10.0f, 90.0f, rng);
    const Volume once = normalize_intensity(v, 0.0f, 255.0f);
    const Volume twice = normalize_intensity(once, 0.0f, 255.0f);
    for (Eigen::Index i = 0; i < once.data().size(); ++i) {
      const float tol = std::max(1.0f, std::abs(once.data()[i])) * FLT_EPSILON;
      CHECK(std::abs(twice.data()[i] - once.data()[i]) <= tol);
    }
  }
  SUBCASE("rejects degenerate input") {
    const Volume flat = make_volume({3, 3, 3}, {}, ValueKind::Intensity, 7.0f);
    CHECK_THROWS_AS(normalize_intensity(flat, 0.0f, 1.0f), ConstantVolume);
    Volume v = make_volume({2, 1, 1});
    v.data() << 0.0f, 1.0f;
    CHECK_THROWS_AS(normalize_intensity(v, 1.0f, 1.0f), OutOfRange);
    CHECK_THROWS_AS(normalize_intensity(v, 2.0f, 1.0f), OutOfRange);
  }
}

TEST_CASE("sample_patches draws in-bounds blocks per foreground slice") {
  std::mt19937_64 rng(311);
  const Dims3 dims{64, 64, 64};
  const Volume vol = testutil::random_intensity(dims, 0.0f, 255.0f, rng);
  const Volume brain = make_volume(dims, {}, ValueKind::Binary, 1.0f);
  PatchSpec spec;
  spec.height = 32;
  spec.width = 32;
  spec.patches_per_slice = 3;
  spec.seed = 7;

  const std::vector<Patch> patches = sample_patches(vol, brain, Axis::Z, spec);
  REQUIRE(patches.size() == 192);  // 64 slices x 3
  for (const Patch& p : patches) {
    CHECK(p.origin.axis == Axis::Z);
    CHECK(p.origin.row0 >= 0);
    CHECK(p.origin.col0 >= 0);
    CHECK(p.origin.row0 + spec.height <= 64);
    CHECK(p.origin.col0 + spec.width <= 64);
    CHECK(p.pixels.rows() == 32);
    CHECK(p.pixels.cols() == 32);
  }

  SUBCASE("patch content is the corresponding slice block") {
    const Patch& p = patches[17];
    const SlicePlane img = extract_slice(vol, Axis::Z, p.origin.slice);
    const SlicePlane msk = extract_slice(brain, Axis::Z, p.origin.slice);
    CHECK((p.pixels == img.values.block(p.origin.row0, p.origin.col0, 32, 32)).all());
    CHECK((p.mask_pixels == msk.values.block(p.origin.row0, p.origin.col0, 32, 32)).all());
  }
  SUBCASE("same seed reproduces the draw, a different seed moves it") {
    const std::vector<Patch> again = sample_patches(vol, brain, Axis::Z, spec);
    REQUIRE(again.size() == patches.size());
    bool identical_origins = true;
    for (std::size_t i = 0; i < patches.size(); ++i) {
      identical_origins = identical_origins &&
                          again[i].origin.row0 == patches[i].origin.row0 &&
                          again[i].origin.col0 == patches[i].origin.col0 &&
                          again[i].origin.slice == patches[i].origin.slice;
    }
    CHECK(identical_origins);

    PatchSpec other = spec;
    other.seed = 8;
    const std::vector<Patch> moved = sample_patches(vol, brain, Axis::Z, other);
    bool any_difference = false;
    for (std::size_t i = 0; i < moved.size(); ++i)
      any_difference = any_difference || moved[i].origin.row0 != patches[i].origin.row0 ||
                       moved[i].origin.col0 != patches[i].origin.col0;
    CHECK(any_difference);
  }
}

TEST_CASE("patch draws are keyed per slice, not per run") {
  std::mt19937_64 rng(321);
  const Dims3 dims{16, 16, 8};
  const Volume vol = testutil::random_intensity(dims, 0.0f, 1.0f, rng);
  const Volume brain = make_volume(dims, {}, ValueKind::Binary, 1.0f);

  Volume only_slice5 = brain;
  for (Eigen::Index z = 0; z < dims.nz; ++z) {
    if (z == 5) continue;
    for (Eigen::Index y = 0; y < dims.ny; ++y)
      for (Eigen::Index x = 0; x < dims.nx; ++x) only_slice5(x, y, z) = 0.0f;
  }

  PatchSpec spec;
  spec.height = 4;
  spec.width = 4;
  spec.patches_per_slice = 2;
  spec.seed = 99;

  const std::vector<Patch> full = sample_patches(vol, brain, Axis::Z, spec);
  const std::vector<Patch> solo = sample_patches(vol, only_slice5, Axis::Z, spec);
  REQUIRE(solo.size() == 2);

  std::vector<const Patch*> full_slice5;
  for (const Patch& p : full)
    if (p.origin.slice == 5) full_slice5.push_back(&p);
  REQUIRE(full_slice5.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(solo[i].origin.row0 == full_slice5[i]->origin.row0);
    CHECK(solo[i].origin.col0 == full_slice5[i]->origin.col0);
    CHECK((solo[i].pixels == full_slice5[i]->pixels).all());
  }
}

TEST_CASE("sample_patches edge cases") {
  std::mt19937_64 rng(331);
  const Dims3 dims{12, 10, 6};
  const Volume vol = testutil::random_intensity(dims, 0.0f, 1.0f, rng);
  const Volume brain = make_volume(dims, {}, ValueKind::Binary, 1.0f);
  PatchSpec spec;
  spec.height = 3;
  spec.width = 3;
  spec.patches_per_slice = 1;

  SUBCASE("empty brain mask yields no patches") {
    const Volume empty = make_volume(dims, {}, ValueKind::Binary);
    CHECK(sample_patches(vol, empty, Axis::Z, spec).empty());
  }
  SUBCASE("a patch the size of the slice is pinned at the origin") {
    PatchSpec full = spec;
    full.height = dims.ny;  // axis Z: rows = ny, cols = nx
    full.width = dims.nx;
    const std::vector<Patch> patches = sample_patches(vol, brain, Axis::Z, full);
    REQUIRE(patches.size() == static_cast<std::size_t>(dims.nz));
    for (const Patch& p : patches) {
      CHECK(p.origin.row0 == 0);
      CHECK(p.origin.col0 == 0);
    }
  }
  SUBCASE("oversized patches are rejected") {
    PatchSpec big = spec;
    big.height = dims.ny + 1;
    CHECK_THROWS_AS(sample_patches(vol, brain, Axis::Z, big), PatchTooLarge);
  }
  SUBCASE("bad spec values are rejected") {
    PatchSpec zero = spec;
    zero.height = 0;
    CHECK_THROWS_AS(sample_patches(vol, brain, Axis::Z, zero), ConfigError);
    PatchSpec none = spec;
    none.patches_per_slice = 0;
    CHECK_THROWS_AS(sample_patches(vol, brain, Axis::Z, none), ConfigError);
  }
  SUBCASE("other axes use their plane layouts") {
    for (const Axis ax : {Axis::X, Axis::Y}) {
      const std::vector<Patch> patches = sample_patches(vol, brain, ax, spec);
      REQUIRE(patches.size() == static_cast<std::size_t>(dims[ax]));
      const Patch& p = patches.front();
      const SlicePlane img = extract_slice(vol, ax, p.origin.slice);
      CHECK((p.pixels == img.values.block(p.origin.row0, p.origin.col0, 3, 3)).all());
    }
  }
  SUBCASE("mismatched or mistyped inputs are rejected") {
    const Volume small = make_volume({4, 4, 4}, {}, ValueKind::Binary, 1.0f);
    CHECK_THROWS_AS(sample_patches(vol, small, Axis::Z, spec), ShapeMismatch);
    const Volume gray = make_volume(dims, {}, ValueKind::Intensity, 1.0f);
    CHECK_THROWS_AS(sample_patches(vol, gray, Axis::Z, spec), Error);
  }
}

TEST_CASE("fuse_triplanar averages the three maps") {
  std::mt19937_64 rng(341);
  SUBCASE("fusing three copies returns the map bit for bit") {
    const Volume p = testutil::random_probability({9, 8, 7}, rng);
    const Volume fused = fuse_triplanar(p, p, p);
    CHECK((fused.data() == p.data()).all());
    CHECK(fused.kind == ValueKind::Probability);
  }
  SUBCASE("worked example") {
    Volume a = make_volume({1, 1, 1}, {}, ValueKind::Probability, 1.0f);
    Volume b = make_volume({1, 1, 1}, {}, ValueKind::Probability, 0.0f);
    Volume c = make_volume({1, 1, 1}, {}, ValueKind::Probability, 0.5f);
    CHECK(fuse_triplanar(a, b, c)(0, 0, 0) == 0.5f);
  }
  SUBCASE("matches the double-precision mean oracle exactly") {
    const Volume a = testutil::random_probability({6, 6, 6}, rng);
    const Volume b = testutil::random_probability({6, 6, 6}, rng);
    const Volume c = testutil::random_probability({6, 6, 6}, rng);
    const Volume fused = fuse_triplanar(a, b, c);
    const Volume want = testutil::mean_fuse(a, b, c);
    CHECK((fused.data() == want.data()).all());
  }
  SUBCASE("rejects out-of-range and mistyped inputs") {
    Volume bad = make_volume({2, 1, 1}, {}, ValueKind::Probability);
    bad.data()[0] = 1.5f;
    const Volume ok = make_volume({2, 1, 1}, {}, ValueKind::Probability);
    CHECK_THROWS_AS(fuse_triplanar(bad, ok, ok), OutOfRange);
    const Volume gray = make_volume({2, 1, 1}, {}, ValueKind::Intensity);
    CHECK_THROWS_AS(fuse_triplanar(gray, ok, ok), Error);
    const Volume other = make_volume({3, 1, 1}, {}, ValueKind::Probability);
    CHECK_THROWS_AS(fuse_triplanar(other, ok, ok), ShapeMismatch);
  }
}

TEST_CASE("threshold_prob binarizes with the shared tie rule") {
  Volume p = make_volume({4, 1, 1}, {}, ValueKind::Probability);
  p.data() << 0.9f, 0.5f, 0.49f, 0.0f;
  const Volume out = threshold_prob(p, 0.5);
  CHECK(out.kind == ValueKind::Binary);
  CHECK(out.data()[0] == 1.0f);
  CHECK(out.data()[1] == 1.0f);  // tie goes to foreground
  CHECK(out.data()[2] == 0.0f);
  CHECK(out.data()[3] == 0.0f);

  std::mt19937_64 rng(351);
  const Volume r = testutil::random_probability({5, 5, 5}, rng);
  const Volume got = threshold_prob(r, 0.4);
  for (Eigen::Index i = 0; i < r.data().size(); ++i)
    CHECK(got.data()[i] == (r.data()[i] >= 0.4f ? 1.0f : 0.0f));

  CHECK_THROWS_AS(threshold_prob(p, 0.0), OutOfRange);
  CHECK_THROWS_AS(threshold_prob(p, 1.0), OutOfRange);
  const Volume gray = make_volume({2, 1, 1}, {}, ValueKind::Intensity);
  CHECK_THROWS_AS(threshold_prob(gray, 0.5), Error);
}

TEST_CASE("stack_autocontext lines up the three maps slice by slice") {
  std::mt19937_64 rng(361);
  const Volume a = testutil::random_probability({5, 6, 7}, rng);
  const Volume b = testutil::random_probability({5, 6, 7}, rng);
  const Volume c = testutil::random_probability({5, 6, 7}, rng);

  const std::vector<AutoContextSlice> stack = stack_autocontext(a, b, c);
  REQUIRE(stack.size() == 5);  // one entry per sagittal slice
  for (const AutoContextSlice& s : stack) {
    CHECK((s.channels[0] == extract_slice(a, Axis::X, s.slice).values).all());
    CHECK((s.channels[1] == extract_slice(b, Axis::X, s.slice).values).all());
    CHECK((s.channels[2] == extract_slice(c, Axis::X, s.slice).values).all());
  }

  const std::vector<AutoContextSlice> same = stack_autocontext(a, a, a);
  for (const AutoContextSlice& s : same) {
    CHECK((s.channels[0] == s.channels[1]).all());
    CHECK((s.channels[1] == s.channels[2]).all());
  }

  const Volume other = make_volume({5, 6, 8}, {}, ValueKind::Probability);
  CHECK_THROWS_AS(stack_autocontext(a, b, other), ShapeMismatch);
}

TEST_CASE("threshold plus largest component cleans a probability map") {
  std::mt19937_64 rng(371);
  Volume p = testutil::random_probability({10, 10, 10}, rng);
  // Plant a dominant blob so the cleanup has a clear winner.
  for (Eigen::Index z = 2; z < 8; ++z)
    for (Eigen::Index y = 2; y < 8; ++y)
      for (Eigen::Index x = 2; x < 8; ++x) p(x, y, z) = 0.95f;

  const Volume mask = threshold_prob(p, 0.5);
  const Volume clean = largest_component(mask, Connectivity::Full26);
  CHECK(((clean.data() == 0.0f) || (mask.data() == 1.0f)).all());
  CHECK(label_components(clean, Connectivity::Full26).num_components() == 1);
}
