#include "serialize.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>

using namespace acae;

TEST_CASE("dense checkpoints round-trip bit-exactly") {
  Rng rng(91);
  AcaeWeights w = oracle::random_dense_weights(7, 19, rng);
  w.catalog_hash = 0xdeadbeefcafef00dull;
  save_weights_json(w, "tmp_ckpt.json");
  AcaeWeights back = load_weights_json("tmp_ckpt.json");
  CHECK_FALSE(back.chiral);
  CHECK(back.catalog_hash == w.catalog_hash);
  CHECK(oracle::bits_equal(back.raw_enc, w.raw_enc));
  CHECK(oracle::bits_equal(back.raw_dec, w.raw_dec));
  std::remove("tmp_ckpt.json");
}

TEST_CASE("chiral checkpoints round-trip bit-exactly") {
  JointCatalog cat = build_catalog(builtin_formats("demo2"));
  LatentPartition part = latent_partition(cat, 10);
  Rng rng(92);
  AcaeWeights w = AcaeWeights::init_chiral(part, cat, rng);
  for (Mat* m : {&w.enc_blocks.w1, &w.dec_blocks.w5})
    for (int i = 0; i < m->size(); ++i) m->data()[i] += rng.normal(0.0, 0.1);
  save_weights_json(w, "tmp_ckpt_chiral.json");
  AcaeWeights back = load_weights_json("tmp_ckpt_chiral.json");
  CHECK(back.chiral);
  CHECK(oracle::bits_equal(assemble_chiral(back.enc_blocks), assemble_chiral(w.enc_blocks)));
  CHECK(oracle::bits_equal(assemble_chiral(back.dec_blocks), assemble_chiral(w.dec_blocks)));
  std::remove("tmp_ckpt_chiral.json");
}

TEST_CASE("catalog meta files round-trip") {
  JointCatalog cat = build_catalog(builtin_formats("demo3"));
  save_catalog_meta(cat, "tmp_meta.json");
  JointCatalog back = load_catalog_meta("tmp_meta.json");
  CHECK(back.hash() == cat.hash());
  CHECK(back.joint_count() == cat.joint_count());
  std::remove("tmp_meta.json");
}

TEST_CASE("loading garbage fails cleanly") {
  {
    std::ofstream out("tmp_garbage.json");
    out << "{\"schema\": \"other\"}";
  }
  CHECK_THROWS_AS(load_weights_json("tmp_garbage.json"), Error);
  CHECK_THROWS_AS(load_catalog_meta("tmp_garbage.json"), Error);
  CHECK_THROWS_AS(load_weights_json("does_not_exist.json"), Error);
  std::remove("tmp_garbage.json");
}
