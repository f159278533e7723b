#include <doctest.h>

#include <vector>

#include "dissl/objectives.hpp"
#include "dissl/rng.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace obj = dissl::objectives;
using obj::EmbeddingBatch;
using obj::Family;
using Mat = Eigen::MatrixXd;

namespace {

using TermFn = double (*)(const EmbeddingBatch&);
using GradFn = double (*)(const EmbeddingBatch&, Mat&, Mat&);

double check_term(TermFn value, GradFn grad, EmbeddingBatch b) {
  Mat gz, gzp;
  grad(b, gz, gzp);
  const auto f = [&] { return value(b); };
  const double e1 = gradcheck::max_rel_error(f, b.z, gz);
  const double e2 = gradcheck::max_rel_error(f, b.z_prime, gzp);
  return std::max(e1, e2);
}

double vicreg_ent_value(const EmbeddingBatch& b) { return obj::vicreg_entropy(b); }
double vicreg_ent_grad(const EmbeddingBatch& b, Mat& gz, Mat& gzp) {
  return obj::vicreg_entropy_grad(b, gz, gzp);
}

}  // namespace

TEST_CASE("gradients: simclr invariance") {
  dissl::RngStream rng(11);
  for (int t = 0; t < 5; ++t)
    CHECK(check_term(&obj::simclr_invariance, &obj::simclr_invariance_grad,
                     oracle::random_batch(rng, 6, 4)) < 1e-4);
}

TEST_CASE("gradients: simclr entropy") {
  dissl::RngStream rng(12);
  for (int t = 0; t < 5; ++t)
    CHECK(check_term(&obj::simclr_entropy, &obj::simclr_entropy_grad,
                     oracle::random_batch(rng, 6, 4)) < 1e-4);
}

TEST_CASE("gradients: barlow invariance") {
  dissl::RngStream rng(13);
  for (int t = 0; t < 5; ++t)
    CHECK(check_term(&obj::barlow_invariance, &obj::barlow_invariance_grad,
                     oracle::random_batch(rng, 6, 4)) < 1e-4);
}

TEST_CASE("gradients: barlow entropy") {
  dissl::RngStream rng(14);
  for (int t = 0; t < 5; ++t)
    CHECK(check_term(&obj::barlow_entropy, &obj::barlow_entropy_grad,
                     oracle::random_batch(rng, 6, 4)) < 1e-4);
}

TEST_CASE("gradients: vicreg invariance") {
  dissl::RngStream rng(15);
  for (int t = 0; t < 5; ++t)
    CHECK(check_term(&obj::vicreg_invariance, &obj::vicreg_invariance_grad,
                     oracle::random_batch(rng, 6, 4)) < 1e-4);
}

TEST_CASE("gradients: vicreg entropy away from the hinge kink") {
  dissl::RngStream rng(16);
  // scale 0.6 keeps every column variance well below 1 so the hinge is active
  // and smooth at the evaluation point
  for (int t = 0; t < 5; ++t)
    CHECK(check_term(&vicreg_ent_value, &vicreg_ent_grad,
                     oracle::random_batch(rng, 8, 4, 0.6)) < 1e-4);
}

TEST_CASE("gradients: structured loss, all families") {
  dissl::RngStream rng(17);
  const std::vector<int> dims = {3, 2, 2};
  const std::vector<double> lambdas = {1.0, 1.5, 0.7};
  for (Family fam : {Family::kSimclr, Family::kBarlow, Family::kVicreg}) {
    auto batch = oracle::random_structured(rng, dims, 5, 0.6);
    obj::StructuredGrad grad;
    obj::structured_loss_grad(batch, lambdas, fam, grad);
    const auto f = [&] {
      return obj::structured_loss(batch, lambdas, fam).total;
    };
    for (std::size_t m = 0; m < batch.modes.size(); ++m)
      for (std::size_t l = 0; l < batch.modes[m].z.size(); ++l) {
        CHECK(gradcheck::max_rel_error(f, batch.modes[m].z[l],
                                       grad.modes[m].z[l]) < 1e-4);
        CHECK(gradcheck::max_rel_error(f, batch.modes[m].z_prime[l],
                                       grad.modes[m].z_prime[l]) < 1e-4);
      }
  }
}

TEST_CASE("gradients: theorem objective") {
  dissl::RngStream rng(18);
  const std::vector<int> dims = {3, 2};
  auto batch = oracle::random_structured(rng, dims, 5);
  // map embeddings into (0.1, 0.9) as the objective requires an open-unit-box
  // domain
  for (auto& mode : batch.modes)
    for (auto* side : {&mode.z, &mode.z_prime})
      for (auto& m : *side)
        m = 0.5 + 0.4 * m.array().tanh().matrix().array();
  obj::StructuredGrad grad;
  obj::theorem_objective_grad(batch, grad);
  const auto f = [&] { return obj::theorem_objective(batch).total; };
  for (std::size_t m = 0; m < batch.modes.size(); ++m)
    for (std::size_t l = 0; l < batch.modes[m].z.size(); ++l) {
      CHECK(gradcheck::max_rel_error(f, batch.modes[m].z[l],
                                     grad.modes[m].z[l]) < 1e-4);
      CHECK(gradcheck::max_rel_error(f, batch.modes[m].z_prime[l],
                                     grad.modes[m].z_prime[l]) < 1e-4);
    }
}

TEST_CASE("gradients: grad functions return the loss value") {
  dissl::RngStream rng(19);
  auto b = oracle::random_batch(rng, 6, 4);
  Mat gz, gzp;
  CHECK(obj::simclr_invariance_grad(b, gz, gzp) ==
        doctest::Approx(obj::simclr_invariance(b)).epsilon(1e-12));
  CHECK(obj::vicreg_entropy_grad(b, gz, gzp) ==
        doctest::Approx(obj::vicreg_entropy(b)).epsilon(1e-12));
}
