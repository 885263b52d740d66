#include "egvq/quantizers.hpp"

#include "egvq/data.hpp"
#include "egvq/metrics.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>

using namespace egvq;

namespace {

FeatureMatrix small_corpus(std::uint64_t seed, Index frames = 400, Index channels = 8) {
  SyntheticConfig config;
  config.num_channels = channels;
  config.num_frames = frames;
  config.profile = VarianceSpec::power_law(1.0, 1.0);
  config.seed = seed;
  return generate(config);
}

QuantizerSpec make_spec(int groups, int depth, Index size, PartitionMode mode) {
  QuantizerSpec spec;
  spec.num_groups = groups;
  spec.depth = depth;
  spec.codebook_size = size;
  spec.partition = mode;
  return spec;
}

}  // namespace

TEST_CASE("train_quantizer resolves partitions as configured") {
  const FeatureMatrix features = small_corpus(1);
  TrainConfig config;
  config.seed = 2;
  config.max_iterations = 10;

  SUBCASE("even split") {
    const TrainedQuantizer q =
        train_quantizer(features, make_spec(2, 1, 8, PartitionMode::even), config);
    CHECK(q.partition().boundaries() == std::vector<Index>{4});
    CHECK_FALSE(q.split_report().has_value());
  }

  SUBCASE("entropy-guided split on a dominant-channel profile") {
    SyntheticConfig dominant;
    dominant.num_channels = 5;
    dominant.num_frames = 4000;
    Eigen::VectorXd v(5);
    v << 4, 1, 1, 1, 1;
    dominant.profile = VarianceSpec::explicit_values_of(v);
    dominant.seed = 3;
    const FeatureMatrix corpus = generate(dominant);
    const TrainedQuantizer q =
        train_quantizer(corpus, make_spec(2, 2, 4, PartitionMode::entropy_guided), config);
    CHECK(q.partition().boundaries() == std::vector<Index>{1});
    REQUIRE(q.split_report().has_value());
    CHECK(q.split_report()->partition == q.partition());
  }

  SUBCASE("explicit ranges pass through") {
    QuantizerSpec spec = make_spec(2, 1, 8, PartitionMode::explicit_ranges);
    spec.explicit_partition = GroupPartition({3}, 8);
    const TrainedQuantizer q = train_quantizer(features, spec, config);
    CHECK(q.partition().boundaries() == std::vector<Index>{3});
  }

  SUBCASE("codebook dimensions follow the group widths") {
    const TrainedQuantizer q =
        train_quantizer(features, make_spec(2, 2, 4, PartitionMode::even), config);
    CHECK(q.codebook(0, 0).dim() == 4);
    CHECK(q.codebook(1, 1).dim() == 4);
    CHECK(q.codebook(0, 0).size() == 4);
  }
}

TEST_CASE("encode with one group and one stage equals plain quantize") {
  const FeatureMatrix features = small_corpus(4, 100, 6);
  TrainConfig config;
  config.seed = 9;
  config.max_iterations = 10;
  const TrainedQuantizer q =
      train_quantizer(features, make_spec(1, 1, 8, PartitionMode::even), config);

  const CodeFrame codes = encode(q, features);
  const QuantizeResult direct = quantize(q.codebook(0, 0), features.values());
  for (Index t = 0; t < features.frames(); ++t) {
    CHECK(codes.indices(t, 0) == direct.indices[t]);
  }
}

TEST_CASE("encode matches the naive greedy-chain oracle") {
  const FeatureMatrix features = small_corpus(5, 60, 8);
  TrainConfig config;
  config.seed = 10;
  config.max_iterations = 15;
  const TrainedQuantizer q =
      train_quantizer(features, make_spec(2, 2, 16, PartitionMode::entropy_guided), config);

  const CodeFrame codes = encode(q, features);
  const testing::NaiveEncodeResult oracle = testing::naive_grouped_encode(q, features);
  for (Index t = 0; t < features.frames(); ++t) {
    for (Index c = 0; c < codes.indices.cols(); ++c) {
      CHECK(codes.indices(t, c) == oracle.indices(t, c));
    }
  }
  CHECK(testing::bit_identical(decode(q, codes).values(), oracle.reconstruction));
}

TEST_CASE("grouped quantizer with G=1 is bit-identical to a standalone RVQ chain") {
  const FeatureMatrix features = small_corpus(6, 120, 5);
  TrainConfig config;
  config.seed = 11;
  config.max_iterations = 15;
  const TrainedQuantizer q =
      train_quantizer(features, make_spec(1, 3, 8, PartitionMode::even), config);

  std::vector<Codebook> chain;
  for (int s = 0; s < 3; ++s) chain.push_back(q.codebook(0, s));
  const IndexMatrix reference = testing::naive_rvq_encode(chain, features);

  const CodeFrame codes = encode(q, features);
  for (Index t = 0; t < features.frames(); ++t) {
    for (Index s = 0; s < 3; ++s) {
      CHECK(codes.indices(t, s) == reference(t, s));
    }
  }
}

TEST_CASE("telescoping: trace energies equal residuals of partial reconstructions") {
  const FeatureMatrix features = small_corpus(7, 200, 8);
  TrainConfig config;
  config.seed = 12;
  config.max_iterations = 10;
  const TrainedQuantizer q =
      train_quantizer(features, make_spec(2, 3, 8, PartitionMode::even), config);

  EncodeTrace trace;
  const CodeFrame codes = encode(q, features, &trace);
  CHECK(trace.input_energy == doctest::Approx(
                                  features.values().cast<double>().squaredNorm()));
  for (int s = 1; s <= 3; ++s) {
    const FeatureMatrix partial = partial_decode(q, codes, s);
    const double residual_energy =
        (features.values().cast<double>() - partial.values().cast<double>()).squaredNorm();
    CHECK(trace.residual_energy[s - 1] ==
          doctest::Approx(residual_energy).epsilon(1e-13));
  }
  // Final-stage residual energy is the reconstruction error.
  const double recon_error = (features.values().cast<double>() -
                              decode(q, codes).values().cast<double>())
                                 .squaredNorm();
  CHECK(trace.residual_energy[2] == doctest::Approx(recon_error).epsilon(1e-13));
}

TEST_CASE("group independence: other groups' channels do not change a group's codes") {
  const FeatureMatrix features = small_corpus(8, 80, 6);
  TrainConfig config;
  config.seed = 13;
  config.max_iterations = 10;
  const TrainedQuantizer q =
      train_quantizer(features, make_spec(2, 2, 8, PartitionMode::even), config);
  const CodeFrame before = encode(q, features);

  Matrix tampered = features.values();
  tampered.middleCols(3, 3).array() += 5.0f;  // perturb group 1 only
  const CodeFrame after = encode(q, FeatureMatrix(tampered));
  for (Index t = 0; t < features.frames(); ++t) {
    CHECK(after.indices(t, q.spec().depth * 0 + 0) == before.indices(t, 0));
    CHECK(after.indices(t, q.spec().depth * 0 + 1) == before.indices(t, 1));
  }
}

TEST_CASE("decode is a fixed point on chain-reachable inputs") {
  // Stage-0 codewords are far apart, stage-1 corrections small, so the
  // greedy chain recovers exactly the codewords that built the input.
  Xoshiro256pp rng(3000);
  const Index dim = 4;
  Matrix coarse = testing::random_matrix(rng, 8, dim, 1.0) * 100.0f;
  Matrix fine = testing::random_matrix(rng, 8, dim, 1.0);
  std::vector<std::vector<Codebook>> books;
  books.push_back({Codebook(coarse), Codebook(fine)});

  QuantizerSpec spec = make_spec(1, 2, 8, PartitionMode::explicit_ranges);
  spec.explicit_partition = GroupPartition::single(dim);
  const TrainedQuantizer q(spec, GroupPartition::single(dim), std::move(books));

  Matrix built(20, dim);
  for (Index t = 0; t < built.rows(); ++t) {
    const Index a = static_cast<Index>(rng.next_below(8));
    const Index b = static_cast<Index>(rng.next_below(8));
    Vector recon = Vector::Zero(dim);
    recon += coarse.row(a);
    recon += fine.row(b);
    built.row(t) = recon;
  }
  const FeatureMatrix input((Matrix(built)));

  EncodeTrace trace;
  const CodeFrame codes = encode(q, input, &trace);
  CHECK(testing::bit_identical(decode(q, codes).values(), input.values()));
  CHECK(trace.residual_energy[1] == 0.0);
}

TEST_CASE("decode of all-zero codebooks is zero") {
  QuantizerSpec spec = make_spec(1, 2, 4, PartitionMode::even);
  std::vector<std::vector<Codebook>> books;
  books.push_back({Codebook(Matrix::Zero(4, 3)), Codebook(Matrix::Zero(4, 3))});
  const TrainedQuantizer q(spec, GroupPartition::single(3), std::move(books));

  CodeFrame codes;
  codes.num_groups = 1;
  codes.depth = 2;
  codes.indices = IndexMatrix::Zero(5, 2);
  CHECK(decode(q, codes).values().isZero(0.0f));
}

TEST_CASE("cumulative error is non-increasing in depth with zero-augmented codebooks") {
  Xoshiro256pp rng(3100);
  const FeatureMatrix features(testing::random_matrix(rng, 150, 6, 2.0));
  QuantizerSpec spec = make_spec(2, 3, 8, PartitionMode::even);

  std::vector<std::vector<Codebook>> books;
  for (int g = 0; g < 2; ++g) {
    std::vector<Codebook> chain;
    for (int s = 0; s < 3; ++s) {
      Matrix words = testing::random_matrix(rng, 8, 3, 1.5);
      words.row(0).setZero();  // zero codeword guarantees monotone refinement
      chain.emplace_back(std::move(words));
    }
    books.push_back(std::move(chain));
  }
  const TrainedQuantizer q(spec, GroupPartition::even(6, 2), std::move(books));

  const CodeFrame codes = encode(q, features);
  double previous = std::numeric_limits<double>::infinity();
  for (int s = 1; s <= 3; ++s) {
    const double err = (features.values().cast<double>() -
                        partial_decode(q, codes, s).values().cast<double>())
                           .squaredNorm();
    CHECK(err <= previous);
    previous = err;
  }
}

TEST_CASE("partial_decode bounds and index validation") {
  const FeatureMatrix features = small_corpus(14, 50, 4);
  TrainConfig config;
  config.seed = 15;
  config.max_iterations = 5;
  const TrainedQuantizer q =
      train_quantizer(features, make_spec(1, 2, 4, PartitionMode::even), config);
  const CodeFrame codes = encode(q, features);

  CHECK_THROWS_AS(partial_decode(q, codes, 0), std::invalid_argument);
  CHECK_THROWS_AS(partial_decode(q, codes, 3), std::invalid_argument);
  CHECK(testing::bit_identical(partial_decode(q, codes, 2).values(),
                               decode(q, codes).values()));

  CodeFrame corrupt = codes;
  corrupt.indices(0, 0) = 99;
  CHECK_THROWS_AS(decode(q, corrupt), std::out_of_range);
}

TEST_CASE("centering subtracts training means and restores them on decode") {
  SyntheticConfig config;
  config.num_channels = 4;
  config.num_frames = 3000;
  config.profile = VarianceSpec::uniform(1.0);
  config.mean_offset = 50.0;
  config.seed = 77;
  const FeatureMatrix features = generate(config);

  TrainConfig train;
  train.seed = 5;
  train.max_iterations = 15;
  const TrainedQuantizer centered =
      train_quantizer(features, make_spec(1, 2, 16, PartitionMode::even), train, true);
  CHECK(centered.centered());
  CHECK(centered.channel_means().size() == 4);
  CHECK(centered.channel_means()[0] == doctest::Approx(50.0).epsilon(0.01));

  // With a large constant offset, centering must help substantially.
  const TrainedQuantizer plain =
      train_quantizer(features, make_spec(1, 2, 16, PartitionMode::even), train, false);
  const double centered_nmse = nmse(features, decode(centered, encode(centered, features)));
  const double plain_nmse = nmse(features, decode(plain, encode(plain, features)));
  CHECK(centered_nmse < plain_nmse);
  CHECK(centered_nmse < 0.01);
}

TEST_CASE("save/load roundtrip preserves the quantizer bit-exactly") {
  const FeatureMatrix features = small_corpus(16, 300, 6);
  TrainConfig config;
  config.seed = 21;
  config.max_iterations = 10;
  const TrainedQuantizer q = train_quantizer(
      features, make_spec(2, 2, 8, PartitionMode::entropy_guided), config, true);

  const auto dir = std::filesystem::temp_directory_path() / "egvq_test_quantizer";
  std::filesystem::remove_all(dir);
  save_quantizer(q, dir);
  const TrainedQuantizer loaded = load_quantizer(dir);

  CHECK(loaded.spec().num_groups == q.spec().num_groups);
  CHECK(loaded.spec().depth == q.spec().depth);
  CHECK(loaded.spec().codebook_size == q.spec().codebook_size);
  CHECK(loaded.partition() == q.partition());
  CHECK(loaded.centered());
  CHECK((loaded.channel_means().array() == q.channel_means().array()).all());
  REQUIRE(loaded.split_report().has_value());
  CHECK(loaded.split_report()->partition == q.split_report()->partition);
  for (int g = 0; g < 2; ++g) {
    for (int s = 0; s < 2; ++s) {
      CHECK(testing::bit_identical(loaded.codebook(g, s).codewords(),
                                   q.codebook(g, s).codewords()));
    }
  }

  const CodeFrame original = encode(q, features);
  const CodeFrame reloaded = encode(loaded, features);
  CHECK((original.indices.array() == reloaded.indices.array()).all());
  std::filesystem::remove_all(dir);
}

TEST_CASE("encode rejects mismatched channel counts") {
  const FeatureMatrix features = small_corpus(17, 50, 6);
  TrainConfig config;
  config.max_iterations = 5;
  const TrainedQuantizer q =
      train_quantizer(features, make_spec(2, 1, 4, PartitionMode::even), config);
  const FeatureMatrix wrong(Matrix::Ones(10, 5));
  CHECK_THROWS_AS(encode(q, wrong), std::invalid_argument);
}
