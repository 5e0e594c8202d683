#include <doctest.h>

#include <set>

#include "facet/cache.hpp"
#include "facet/digest.hpp"
#include "facet/errors.hpp"
#include "facet/io.hpp"
#include "temp_dir.hpp"

using namespace facet;

TEST_CASE("sha256 matches known vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("sha256_file digests the exact bytes") {
    facet::testing::TempDir tmp;
    write_file_atomic(tmp / "f.bin", "abc");
    CHECK(sha256_file(tmp / "f.bin") == sha256_hex("abc"));
}

TEST_CASE("base64 known vectors") {
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("fo") == "Zm8=");
    CHECK(base64_encode("foo") == "Zm9v");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
}

TEST_CASE("SplitMix64 streams are deterministic") {
    SplitMix64 a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    SplitMix64 c(43);
    CHECK(SplitMix64(42).next() != c.next());
    for (int i = 0; i < 1000; ++i) {
        double u = SplitMix64(42 + i).next_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(SplitMix64(7).next_below(5) < 5);
    }
    CHECK(seed_from_text("alpha") == seed_from_text("alpha"));
    CHECK(seed_from_text("alpha") != seed_from_text("beta"));
}

TEST_CASE("deterministic_shuffle permutes identically for equal seeds") {
    std::vector<int> a{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<int> b = a;
    std::vector<int> sorted = a;
    deterministic_shuffle(a, 9);
    deterministic_shuffle(b, 9);
    CHECK(a == b);
    std::vector<int> back = a;
    std::sort(back.begin(), back.end());
    CHECK(back == sorted); // a permutation, nothing lost
    std::vector<int> other = sorted;
    deterministic_shuffle(other, 10);
    CHECK(other != a); // different seed, different order (for this size)
}

TEST_CASE("cache keys change with any ingredient") {
    nlohmann::json payload{{"prompt", "hi"}, {"temperature", 0.0}};
    CacheKey base = CacheKey::make("chat", "model-a", payload);
    CHECK(base.digest == CacheKey::make("chat", "model-a", payload).digest);
    CHECK(base.digest != CacheKey::make("vision", "model-a", payload).digest);
    CHECK(base.digest != CacheKey::make("chat", "model-b", payload).digest);
    nlohmann::json changed = payload;
    changed["temperature"] = 0.5;
    CHECK(base.digest != CacheKey::make("chat", "model-a", changed).digest);
    // Key ordering inside the payload must not matter.
    nlohmann::json reordered{{"temperature", 0.0}, {"prompt", "hi"}};
    CHECK(base.digest == CacheKey::make("chat", "model-a", reordered).digest);
}

TEST_CASE("response cache stores and replays entries") {
    facet::testing::TempDir tmp;
    ResponseCache cache(tmp / "cache");
    CacheKey key = CacheKey::make("chat", "m", {{"q", 1}});
    CHECK_FALSE(cache.get(key).has_value());
    CHECK_FALSE(cache.contains(key));
    cache.put(key, {{"q", 1}}, "answer");
    CHECK(cache.contains(key));
    CHECK(cache.get(key).value() == "answer");
    CHECK(cache.entry_count() == 1);
    cache.put(key, {{"q", 1}}, "answer"); // idempotent
    CHECK(cache.entry_count() == 1);

    ResponseCache reopened(tmp / "cache");
    CHECK(reopened.get(key).value() == "answer");
}

TEST_CASE("corrupt cache entries are reported, not silently served") {
    facet::testing::TempDir tmp;
    ResponseCache cache(tmp / "cache");
    CacheKey key = CacheKey::make("chat", "m", {{"q", 2}});
    cache.put(key, {{"q", 2}}, "answer");
    // Clobber the stored entry with non-JSON bytes.
    std::vector<std::filesystem::path> entries;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(cache.dir()))
        if (entry.is_regular_file()) entries.push_back(entry.path());
    for (const auto& path : entries) write_file_atomic(path, "not json");
    CHECK_THROWS_AS(cache.get(key), ParseError);
}
