#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "plumepipe/cube.hpp"
#include "plumepipe/error.hpp"
#include "plumepipe/rng.hpp"

using namespace plumepipe;

namespace {

HyperCube cube_with_wavelengths(std::vector<double> wl) {
  const int bands = static_cast<int>(wl.size());
  return HyperCube::zeros(2, 2, bands, std::move(wl));
}

}  // namespace

TEST_CASE("select_bands on an EMIT-like grid matches the scan oracle") {
  // 285 bands spaced 7.4 nm starting at 381 nm.
  std::vector<double> wl(285);
  for (int i = 0; i < 285; ++i) wl[i] = 381.0 + 7.4 * i;
  BandSelection sel;
  sel.ranges_nm = {{1573.0, 1699.0}, {2004.0, 2478.0}};
  sel.rgb_targets_nm = {462.0, 550.0, 640.0};

  auto expected = oracle::select_band_indices(wl, sel.ranges_nm, sel.rgb_targets_nm);
  auto got = selected_band_indices(wl, sel);
  CHECK(got == expected);

  auto cube = cube_with_wavelengths(wl);
  auto out = select_bands(cube, sel);
  CHECK(out.bands == static_cast<int>(expected.size()));
  for (std::size_t k = 0; k < expected.size(); ++k)
    CHECK(out.wavelengths_nm[k] == wl[expected[k]]);

  // expected_count is a check, not a truth source
  sel.expected_count = static_cast<int>(expected.size());
  CHECK_NOTHROW(select_bands(cube, sel));
  sel.expected_count = 86;
  CHECK_THROWS_AS(select_bands(cube, sel), Error);
}

TEST_CASE("select_bands keeps all-inside bands in order") {
  auto cube = cube_with_wavelengths({1600.0, 1650.0});
  BandSelection sel;
  sel.ranges_nm = {{1573.0, 1699.0}};
  auto out = select_bands(cube, sel);
  CHECK(out.bands == 2);
  CHECK(out.wavelengths_nm == std::vector<double>{1600.0, 1650.0});
}

TEST_CASE("select_bands with no match raises EmptySelection") {
  auto cube = cube_with_wavelengths({900.0, 1000.0});
  BandSelection sel;
  sel.ranges_nm = {{1573.0, 1699.0}};
  try {
    select_bands(cube, sel);
    FAIL("expected EmptySelection");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptySelection);
  }
}

TEST_CASE("select_bands is idempotent") {
  Rng rng(11);
  auto cube = oracle::random_cube(rng, 4, 5, 30);
  BandSelection sel;
  sel.ranges_nm = {{450.0, 520.0}, {600.0, 680.0}};
  sel.rgb_targets_nm = {405.0};
  auto once = select_bands(cube, sel);
  auto twice = select_bands(once, sel);
  CHECK(once.wavelengths_nm == twice.wavelengths_nm);
  CHECK(oracle::same_floats(once.data, twice.data));
  CHECK(once.valid == twice.valid);
}

TEST_CASE("band_stats two-point and constant cases") {
  auto cube = HyperCube::zeros(1, 2, 1, {500.0});
  cube.at(0, 0, 0) = 1.0f;
  cube.at(0, 1, 0) = 3.0f;
  auto st = band_stats({&cube});
  CHECK(st.mean[0] == doctest::Approx(2.0));
  CHECK(st.stddev[0] == doctest::Approx(1.0));  // population, divisor N
  CHECK(st.pixel_count == 2);

  auto flat = HyperCube::zeros(3, 3, 1, {500.0});
  for (auto& v : flat.data) v = 7.25f;
  auto st2 = band_stats({&flat});
  CHECK(st2.mean[0] == doctest::Approx(7.25));
  CHECK(st2.stddev[0] == doctest::Approx(0.0));
}

TEST_CASE("band_stats over random cubes matches the flat-loop oracle") {
  Rng rng(2024);
  std::vector<HyperCube> cubes;
  for (int i = 0; i < 100; ++i)
    cubes.push_back(oracle::random_cube(rng, 3 + int(rng.next_below(5)),
                                        3 + int(rng.next_below(5)), 6));
  std::vector<const HyperCube*> ptrs;
  for (auto& c : cubes) ptrs.push_back(&c);

  auto st = band_stats(ptrs);
  auto ref = oracle::flat_band_stats(ptrs);
  CHECK(st.pixel_count == ref.count);
  for (int b = 0; b < 6; ++b) {
    CHECK(st.mean[b] == doctest::Approx(ref.mean[b]).epsilon(1e-5));
    CHECK(st.stddev[b] == doctest::Approx(ref.stddev[b]).epsilon(1e-5));
  }
}

TEST_CASE("band_stats is permutation-invariant over the cube sequence") {
  Rng rng(5);
  std::vector<HyperCube> cubes;
  for (int i = 0; i < 4; ++i) cubes.push_back(oracle::random_cube(rng, 4, 4, 3));
  std::vector<const HyperCube*> fwd{&cubes[0], &cubes[1], &cubes[2], &cubes[3]};
  std::vector<const HyperCube*> rev{&cubes[3], &cubes[2], &cubes[1], &cubes[0]};
  auto a = band_stats(fwd);
  auto b = band_stats(rev);
  for (int k = 0; k < 3; ++k) {
    CHECK(a.mean[k] == doctest::Approx(b.mean[k]).epsilon(1e-12));
    CHECK(a.stddev[k] == doctest::Approx(b.stddev[k]).epsilon(1e-12));
  }
}

TEST_CASE("band_stats error paths") {
  auto cube = HyperCube::zeros(1, 1, 1, {500.0});
  cube.set_invalid(0, 0);
  try {
    band_stats({&cube});
    FAIL("expected NoValidPixels");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoValidPixels);
  }

  auto a = HyperCube::zeros(1, 1, 1, {500.0});
  auto b = HyperCube::zeros(1, 1, 1, {501.0});
  try {
    band_stats({&a, &b});
    FAIL("expected WavelengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::WavelengthMismatch);
  }
}

TEST_CASE("normalize hand cases") {
  auto cube = HyperCube::zeros(1, 1, 1, {500.0});
  cube.at(0, 0, 0) = 5.0f;
  BandStats st;
  st.mean = {3.0};
  st.stddev = {2.0};
  st.pixel_count = 10;
  auto out = normalize(cube, st);
  CHECK(out.at(0, 0, 0) == doctest::Approx(1.0));

  // zero-std guard
  st.stddev = {0.0};
  auto guarded = normalize(cube, st, 1e-6);
  CHECK(std::isfinite(guarded.at(0, 0, 0)));
  CHECK(guarded.at(0, 0, 0) == doctest::Approx((5.0 - 3.0) / 1e-6));
}

TEST_CASE("normalize leaves invalid pixels filled and preserves the mask") {
  Rng rng(9);
  auto cube = oracle::random_cube(rng, 8, 8, 4, 0.3);
  auto st = band_stats({&cube});
  auto out = normalize(cube, st);
  CHECK(out.valid == cube.valid);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c)
      if (!out.is_valid(r, c))
        for (int b = 0; b < 4; ++b) CHECK(std::isnan(out.at(r, c, b)));
}

TEST_CASE("renormalization drives mean to 0 and std to 1") {
  Rng rng(123);
  auto cube = oracle::random_cube(rng, 16, 16, 5, 0.1);
  auto st = band_stats({&cube});
  auto normed = normalize(cube, st);
  auto st2 = band_stats({&normed});
  for (int b = 0; b < 5; ++b) {
    CHECK(std::abs(st2.mean[b]) < 1e-5);
    CHECK(std::abs(st2.stddev[b] - 1.0) < 1e-5);
  }
}
