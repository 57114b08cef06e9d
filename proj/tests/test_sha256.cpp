#include <catch_amalgamated.hpp>

#include <string>

#include "gnnspace/sha256.hpp"

using namespace gnnspace;

// Reference digests for the standard test vectors.
TEST_CASE("sha256 matches published vectors") {
    REQUIRE(Sha256::hex("abc") ==
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    REQUIRE(Sha256::hex("") ==
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    REQUIRE(Sha256::hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
    REQUIRE(Sha256::hex(std::string(1000, 'a')) ==
            "41edece42d63e8d9bf515a9ba6932e1c20cbc9f5a5d134645adb5db1b9737ea3");
}

TEST_CASE("seed_from_hash is a frozen function of digest and stream") {
    std::string digest = Sha256::hex("abc");
    // First 8 digest bytes of sha256("<digest>:7"), big-endian.
    REQUIRE(seed_from_hash(digest, 7) == 5420884385420012527ULL);
    REQUIRE(seed_from_hash(digest, 7) == seed_from_hash(digest, 7));
    REQUIRE(seed_from_hash(digest, 7) != seed_from_hash(digest, 8));
    REQUIRE(seed_from_hash(digest, 7) != seed_from_hash(Sha256::hex("abd"), 7));
}
