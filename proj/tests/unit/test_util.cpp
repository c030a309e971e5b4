#include <fstream>

#include "doctest.h"
#include "switchminer/date.hpp"
#include "switchminer/error.hpp"
#include "switchminer/hashing.hpp"
#include "switchminer/jsonl.hpp"
#include "switchminer/modality.hpp"
#include "switchminer/random.hpp"
#include "test_support.hpp"

using namespace switchminer;

TEST_SUITE("util") {

TEST_CASE("date parse and print round trip") {
  auto d = Date::parse("2021-03-04");
  REQUIRE(d);
  CHECK(d->to_string() == "2021-03-04");
  CHECK(Date(1970, 1, 1).days_since_epoch() == 0);
  CHECK(Date(2000, 3, 1) - Date(2000, 2, 28) == 2);
  CHECK_FALSE(Date::parse("2021-02-30"));
  CHECK_FALSE(Date::parse("2021-3-4"));
  CHECK_FALSE(Date::parse("garbage"));
}

TEST_CASE("age uses floor of days over 365.25") {
  CHECK(age_in_years(Date(2000, 1, 1), Date(2020, 1, 1)) == 20);
  CHECK(age_in_years(Date(2000, 1, 2), Date(2020, 1, 1)) == 19);
}

TEST_CASE("sha256 of known strings") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("derived seeds differ by key and are stable") {
  static_assert(derive_seed(7, "generate") == derive_seed(7, "generate"));
  CHECK(derive_seed(7, "generate") != derive_seed(7, "detect"));
  CHECK(derive_seed(7, "generate") != derive_seed(8, "generate"));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
}

TEST_CASE("rng draws stay in range and repeat per seed") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(a.below(7) < 7);
    b.below(7);
  }
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  auto w = v;
  Rng(3).shuffle(w);
  std::sort(w.begin(), w.end());
  CHECK(w == v);
}

TEST_CASE("jsonl reads records and reports malformed lines") {
  testing::TempDir dir("jsonl");
  const auto p = dir / "x.jsonl";
  write_text_file(p, "{\"a\":1}\n\nnot json\n[1,2]\n{\"a\":2}\n");
  std::vector<MalformedLine> bad;
  auto records = read_jsonl(p, &bad);
  REQUIRE(records.size() == 2);
  CHECK(records[1]["a"] == 2);
  REQUIRE(bad.size() == 2);
  CHECK(bad[0].line_number == 3);
  CHECK(bad[1].line_number == 4);
  write_jsonl(p, records);
  CHECK(read_jsonl(p) == records);
  CHECK_THROWS_AS(read_text_file(dir / "missing"), IoError);
}

TEST_CASE("dump_json tolerates invalid utf-8") {
  Json j = {{"text", std::string("ok\xff\xfe")}};
  CHECK_NOTHROW(dump_json(j));
}

TEST_CASE("modality set operations") {
  ModalitySet s{Modality::Oral, Modality::IUD};
  CHECK(s.size() == 2);
  CHECK(s.contains(Modality::IUD));
  CHECK_FALSE(s.contains(Modality::Implant));
  CHECK(s.primary() == Modality::IUD);  // "IUD" < "Oral"
  CHECK(ModalitySet{}.primary() == Modality::None);
  CHECK(s.minus(ModalitySet{Modality::Oral}) == ModalitySet{Modality::IUD});
  CHECK(modality_set_from_names(modality_names(s)) == s);
  for (Modality m : kPrescribedModalities) CHECK(parse_modality(to_string(m)) == m);
  CHECK_FALSE(parse_modality("Condom"));
}

}  // TEST_SUITE
