#include <algorithm>

#include "ccrseq/augment.hpp"
#include "ccrseq/render.hpp"
#include "doctest.h"

using namespace ccrseq;

TEST_CASE("weak augment: forced brightness on a flat image is a pure shift") {
  MatXd g = MatXd::Constant(kImageH, kImageW, 0.5);
  MatXd out = augment::weak_apply(g, 0.2, 1.0);
  CHECK((out.array() - 0.7).abs().maxCoeff() < 1e-12);
}

TEST_CASE("weak augment: zero-magnitude config is the identity") {
  ImageSample s = render_clean("abc", 1);
  ImageSample out = augment::weak_augment(s, 99, augment::WeakParams{0.0, 0.0});
  CHECK(out.pixels == s.pixels);
  MatXd g = s.pixels;
  CHECK(augment::weak_apply(g, 0.0, 1.0) == g);
}

TEST_CASE("weak augment is deterministic and metadata-preserving") {
  ImageSample s = render_perturbed("k9", 5);
  ImageSample a = augment::weak_augment(s, 7), b = augment::weak_augment(s, 7);
  CHECK(a.pixels == b.pixels);
  CHECK(a.label == s.label);
  CHECK(a.domain == s.domain);
  ImageSample c = augment::weak_augment(s, 8);
  CHECK(a.pixels != c.pixels);
  CHECK(a.pixels.minCoeff() >= 0.0);
  CHECK(a.pixels.maxCoeff() <= 1.0);
}

TEST_CASE("strong augment: zero ops or zero magnitude on parametric ops is identity") {
  ImageSample s = render_clean("q7w", 2);
  ImageSample none = augment::strong_augment(s, 3, augment::StrongParams{0, 10});
  CHECK(none.pixels == s.pixels);
  // ops 0..9 are parametric and exactly identity at magnitude 0
  for (int op = 0; op <= 9; ++op) {
    CHECK(augment::strong_apply_op(s.pixels, op, 0, false) == s.pixels);
    CHECK(augment::strong_apply_op(s.pixels, op, 0, true) == s.pixels);
  }
}

TEST_CASE("strong augment is deterministic, in-range, metadata-preserving") {
  ImageSample s = render_clean("deck42", 17);
  ImageSample a = augment::strong_augment(s, 21), b = augment::strong_augment(s, 21);
  CHECK(a.pixels == b.pixels);
  CHECK(a.label == s.label);
  CHECK(a.domain == s.domain);
  for (uint64_t seed = 0; seed < 50; ++seed) {
    ImageSample out = augment::strong_augment(s, seed);
    CHECK(out.pixels.minCoeff() >= 0.0);
    CHECK(out.pixels.maxCoeff() <= 1.0);
  }
}

TEST_CASE("strong op pool bans region erasing and covers 12 ops") {
  const auto& pool = augment::strong_op_pool();
  CHECK(pool.size() == 12);
  for (const auto& name : pool) {
    CHECK(name.find("cut") == std::string::npos);
    CHECK(name.find("erase") == std::string::npos);
  }
  CHECK(std::find(pool.begin(), pool.end(), "rotate") != pool.end());
  CHECK(std::find(pool.begin(), pool.end(), "equalize") != pool.end());
}

TEST_CASE("every pool op is reachable and produces in-range output") {
  ImageSample s = render_clean("m0m", 4);
  for (int op = 0; op < 12; ++op) {
    MatXd out = augment::strong_apply_op(s.pixels, op, 10, false);
    CHECK(out.rows() == kImageH);
    CHECK(out.minCoeff() >= 0.0);
    CHECK(out.maxCoeff() <= 1.0);
  }
  CHECK_THROWS_AS(augment::strong_apply_op(s.pixels, 12, 5, false), std::out_of_range);
}

TEST_CASE("policy dispatch covers none/weak/strong") {
  ImageSample s = render_clean("j", 6);
  augment::Policy none{augment::Kind::kNone, {}, {}};
  CHECK(augment::apply_policy(s, 1, none).pixels == s.pixels);
  augment::Policy weak{augment::Kind::kWeak, {}, {}};
  CHECK(augment::apply_policy(s, 1, weak).pixels ==
        augment::weak_augment(s, 1).pixels);
  augment::Policy strong{augment::Kind::kStrong, {}, {}};
  CHECK(augment::apply_policy(s, 1, strong).pixels ==
        augment::strong_augment(s, 1).pixels);
}
