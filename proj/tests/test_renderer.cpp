#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "progdf/error.hpp"
#include "progdf/image_io.hpp"
#include "progdf/renderer.hpp"
#include "test_support.hpp"

using namespace progdf;

namespace {

Camera identity_camera(int w, int h, double f) {
  Camera cam;
  cam.width = w;
  cam.height = h;
  cam.fx = cam.fy = f;
  cam.cx = 0.5 * w;
  cam.cy = 0.5 * h;
  return cam;
}

}  // namespace

TEST_CASE("projection of a Gaussian on the optical axis lands on the principal point") {
  const Camera cam = identity_camera(32, 24, 40.0);
  GaussianPrimitive g;
  g.position = Vec3(0.0, 0.0, 3.0);
  g.scale = Vec3(0.2, 0.2, 0.2);
  auto splat = project_gaussian(g, cam);
  REQUIRE(splat);
  CHECK(splat->mean.x() == doctest::Approx(cam.cx));
  CHECK(splat->mean.y() == doctest::Approx(cam.cy));
  CHECK(splat->depth == doctest::Approx(3.0));

  // Isotropic: the Jacobian at the axis is diag(f/d, f/d) on x and y.
  const double expected = std::pow(40.0 * 0.2 / 3.0, 2) + 0.3;
  CHECK(splat->cov(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(splat->cov(1, 1) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(splat->cov(0, 1)) < 1e-12);
}

TEST_CASE("Gaussians behind the camera or at the near plane are culled") {
  const Camera cam = identity_camera(16, 16, 20.0);
  GaussianPrimitive g;
  g.position = Vec3(0.0, 0.0, -1.0);
  CHECK_FALSE(project_gaussian(g, cam).has_value());
  g.position = Vec3(0.0, 0.0, 0.01);
  CHECK_FALSE(project_gaussian(g, cam).has_value());
}

TEST_CASE("empty scene renders the background") {
  Scene s;
  s.background = Vec3(0.2, 0.4, 0.6);
  const ImageBuffer img = render(s, testing::test_camera(8));
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      CHECK(img.at(x, y, 0) == 0.2);
      CHECK(img.at(x, y, 1) == 0.4);
      CHECK(img.at(x, y, 2) == 0.6);
    }
  }
}

TEST_CASE("two coincident splats composite front to back") {
  // Enormous footprints make the falloff exactly 1 at the image center.
  const Camera cam = identity_camera(4, 4, 10.0);
  Scene s;
  GaussianPrimitive front;
  front.position = Vec3(0.0, 0.0, 2.0);
  front.scale = Vec3(1e6, 1e6, 1e-3);
  front.opacity = 0.5;
  front.color = Vec3(1.0, 0.0, 0.0);
  GaussianPrimitive back = front;
  back.position = Vec3(0.0, 0.0, 3.0);
  back.color = Vec3(0.0, 0.0, 1.0);
  s.gaussians = {back, front};
  const ImageBuffer img = render(s, cam);
  CHECK(img.at(1, 1, 0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(img.at(1, 1, 1) == doctest::Approx(0.0));
  CHECK(img.at(1, 1, 2) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("fast renderer with cutoffs disabled matches the brute-force oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene s = testing::random_scene(100 + seed, 8);
    const Camera cam = testing::test_camera(32, 20.0 * seed, 10.0);
    const double diff =
        testing::max_abs_diff(render(s, cam, RasterSettings::exhaustive()),
                              testing::brute_force_render(s, cam));
    CHECK(diff <= 1e-5);
  }
}

TEST_CASE("default cutoffs stay close to the exhaustive render") {
  const Scene s = testing::random_scene(9, 12);
  const Camera cam = testing::test_camera(32);
  CHECK(testing::max_abs_diff(render(s, cam), render(s, cam, RasterSettings::exhaustive())) < 0.05);
}

TEST_CASE("rendered channels stay in [0, 1]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Scene s = testing::random_scene(200 + seed, 40);
    const ImageBuffer img = render(s, testing::test_camera(24));
    const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    CHECK(*lo >= 0.0);
    CHECK(*hi <= 1.0);
  }
}

TEST_CASE("permuting the Gaussian list leaves the image unchanged") {
  const Scene s = testing::random_scene(31, 25);
  Scene shuffled = s;
  std::mt19937_64 rng(5);
  std::shuffle(shuffled.gaussians.begin(), shuffled.gaussians.end(), rng);
  const Camera cam = testing::test_camera(32);
  CHECK(render(s, cam).pixels == render(shuffled, cam).pixels);
}

TEST_CASE("render_backward: zero adjoint gives zero gradients") {
  const Scene s = testing::random_scene(8, 6);
  const Camera cam = testing::test_camera(16);
  const auto grads = render_backward(s, cam, ImageBuffer(16, 16, 0.0));
  for (const auto& g : grads) {
    for (double v : g) CHECK(v == 0.0);
  }
}

TEST_CASE("render_backward: red-channel loss only touches the red color logit") {
  Scene s;
  GaussianPrimitive g;
  g.position = Vec3(0.0, 0.0, 0.0);
  g.scale = Vec3(0.3, 0.3, 0.3);
  g.opacity = 0.8;
  g.color = Vec3(0.4, 0.5, 0.6);
  s.gaussians.push_back(g);
  const Camera cam = testing::test_camera(16);
  ImageBuffer adjoint(16, 16, 0.0);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) adjoint.at(x, y, 0) = 1.0;
  }
  const auto grads = render_backward(s, cam, adjoint);
  CHECK(grads[0][raw::kColorLogit] > 0.0);
  CHECK(grads[0][raw::kColorLogit + 1] == 0.0);
  CHECK(grads[0][raw::kColorLogit + 2] == 0.0);
}

TEST_CASE("render_backward rejects a mis-sized adjoint") {
  const Scene s = testing::random_scene(8, 3);
  CHECK_THROWS_AS(render_backward(s, testing::test_camera(16), ImageBuffer(15, 16)), Error);
}

TEST_CASE("render_backward matches central finite differences") {
  auto fwd = [](const Scene& sc, const Camera& c) { return render(sc, c); };
  auto bwd = [](const Scene& sc, const Camera& c, const ImageBuffer& a) {
    return render_backward(sc, c, a);
  };
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene s = testing::random_scene(300 + seed, 5);
    const Camera cam = testing::test_camera(16, 37.0 * seed, 12.0);
    const auto check = testing::check_mean_square_gradients(s, cam, fwd, bwd);
    INFO("seed " << seed << " checked " << check.checked << " passed " << check.passed);
    CHECK(check.checked > 20);
    CHECK(check.pass_fraction() >= 0.95);
  }
}

TEST_CASE("laplacian response") {
  SUBCASE("constant image is zero") {
    CHECK(laplacian_response(ImageBuffer(5, 4, 0.7)) == 0.0);
  }
  SUBCASE("3x3 impulse") {
    ImageBuffer img(3, 3, 0.0);
    for (int c = 0; c < 3; ++c) img.at(1, 1, c) = 1.0;
    CHECK(laplacian_response(img) == doctest::Approx(20.0 / 9.0).epsilon(1e-12));
  }
  SUBCASE("non-negative and differentiable") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ImageBuffer img(6, 5);
    for (double& v : img.pixels) v = u(rng);
    ImageBuffer grad;
    const double v = laplacian_response(img, grad);
    CHECK(v >= 0.0);
    for (std::size_t i = 0; i < img.pixels.size(); i += 7) {
      ImageBuffer p = img, m = img;
      p.pixels[i] += 1e-6;
      m.pixels[i] -= 1e-6;
      const double fd = (laplacian_response(p) - laplacian_response(m)) / 2e-6;
      CHECK(grad.pixels[i] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
  SUBCASE("too small") { CHECK_THROWS_AS(laplacian_response(ImageBuffer(2, 5)), Error); }
}

TEST_CASE("PNG encoding round-trips 8-bit levels") {
  ImageBuffer img(5, 3);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = (i * 17 % 256) / 255.0;
  const auto bytes = encode_png(img);
  const ImageBuffer back = decode_png(bytes);
  REQUIRE(back.same_shape(img));
  CHECK(testing::max_abs_diff(back, img) < 1e-12);
  CHECK(encode_png(img) == bytes);

  Mask2D m(11, 4);
  m.bits[3] = m.bits[12] = m.bits[43] = 1;
  CHECK(decode_mask_png(encode_mask_png(m)) == m);
  CHECK_THROWS_AS(decode_png(std::vector<std::uint8_t>{1, 2, 3}), Error);
}
