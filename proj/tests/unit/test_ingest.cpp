#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include "uniformity/ingest.hpp"

using namespace uniformity;

namespace {

std::vector<RawRecord> parse(const std::string& s) {
    std::istringstream in(s);
    return parse_jsonl(in);
}

template <typename E>
std::string message_of(const std::string& s) {
    try {
        parse(s);
    } catch (const E& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(Jsonl, ThreeValidLinesInOrder) {
    const auto recs = parse(R"({"id":"a","vector":[1,2]}
{"id":"b","instruction":"do","input":"this","output":"now"}
{"id":"c","vector":[3,4],"output":"x"}
)");
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_EQ(recs[0].id, "a");
    EXPECT_EQ(recs[1].id, "b");
    EXPECT_EQ(recs[2].id, "c");
    EXPECT_EQ(*recs[1].text, "do this now");
    EXPECT_FALSE(recs[1].vector);
    EXPECT_EQ(*recs[2].vector, (std::vector<double>{3, 4}));
}

TEST(Jsonl, MissingTextAndVectorNamesLine) {
    const auto msg = message_of<ParseError>("{\"id\":\"a\",\"vector\":[1]}\n{\"id\":\"b\"}\n");
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(Jsonl, DimensionMismatch) {
    const auto msg = message_of<ValidationError>("{\"id\":\"a\",\"vector\":[1,2,3,4]}\n{\"id\":\"b\",\"vector\":[1,2,3,4,5]}\n");
    EXPECT_NE(msg.find("dimension mismatch"), std::string::npos) << msg;
}

TEST(Jsonl, DuplicateIdAndMalformedLine) {
    EXPECT_NE(message_of<ValidationError>("{\"id\":\"a\",\"vector\":[1]}\n{\"id\":\"a\",\"vector\":[2]}\n").find("duplicate"),
              std::string::npos);
    EXPECT_NE(message_of<ParseError>("{\"id\":\"a\",\"vector\":[1]}\n\n{oops\n").find("line 3"), std::string::npos);
}

TEST(Jsonl, MissingFileIsIoError) { EXPECT_THROW(load_jsonl("/nonexistent/file.jsonl"), IoError); }

TEST(Tokenize, WhitespaceAndCase) {
    EXPECT_EQ(tokenize("  Hello\tWORLD\n x "), (std::vector<std::string>{"hello", "world", "x"}));
    // U+00A0 and U+2003 are whitespace
    EXPECT_EQ(tokenize("a\xC2\xA0" "b\xE2\x80\x83" "c"), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_TRUE(tokenize(" \t ").empty());
}

TEST(Embed, VectorsPassThroughBitwise) {
    std::vector<RawRecord> recs{{"a", std::nullopt, std::vector<double>{0.1, -2.5, 1e-300}},
                                {"b", std::nullopt, std::vector<double>{3.0, 0.0, -0.0}}};
    const auto ds = embed_average(recs, 3, 9);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < 3; ++k)
            EXPECT_EQ(std::bit_cast<std::uint64_t>(ds.point(i)[k]),
                      std::bit_cast<std::uint64_t>((*recs[i].vector)[k]));
}

TEST(Embed, DeterministicAndRepeatedTokenMean) {
    std::vector<RawRecord> recs{{"x", "a a", std::nullopt}, {"y", "a", std::nullopt}, {"z", "a b", std::nullopt}};
    const auto d1 = embed_average(recs, 8, 42);
    const auto d2 = embed_average(recs, 8, 42);
    EXPECT_EQ(d1, d2);
    for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(d1.point(0)[k], d1.point(1)[k]);
    // hand mean of the two token vectors
    const auto va = token_vector("a", 8, 42), vb = token_vector("b", 8, 42);
    for (std::size_t k = 0; k < 8; ++k) EXPECT_DOUBLE_EQ(d1.point(2)[k], (va[k] + vb[k]) / 2.0);
    EXPECT_NE(embed_average(recs, 8, 43), d1);
}

TEST(Embed, EmptyTokensNamesRecord) {
    std::vector<RawRecord> recs{{"blank-one", "   ", std::nullopt}};
    try {
        embed_average(recs, 4, 1);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("blank-one"), std::string::npos);
    }
}

TEST(Dataset, RejectsNonFiniteAndDuplicates) {
    EmbeddedDataset ds(2);
    const double ok[2] = {1, 2};
    const double nan[2] = {1, std::numeric_limits<double>::quiet_NaN()};
    const double inf[2] = {std::numeric_limits<double>::infinity(), 0};
    ds.add("a", ok);
    EXPECT_THROW(ds.add("b", nan), ValidationError);
    EXPECT_THROW(ds.add("c", inf), ValidationError);
    EXPECT_THROW(ds.add("a", ok), ValidationError);
    const double short_v[1] = {1};
    EXPECT_THROW(ds.add("d", short_v), ValidationError);
    EXPECT_EQ(ds.size(), 1u);
}

TEST(VectorCsv, RoundTripIsBitExact) {
    Rng rng(1);
    EmbeddedDataset ds(3);
    for (int i = 0; i < 50; ++i) {
        const double v[3] = {rng.normal() * 1e-7, rng.normal() * 1e9, i == 0 ? 0.1 : rng.uniform()};
        ds.add("p" + std::to_string(i), v);
    }
    std::stringstream buf;
    write_vectors(ds, buf);
    const auto back = read_vectors(buf);
    EXPECT_EQ(back, ds);
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back.point(0)[2]), std::bit_cast<std::uint64_t>(0.1));
}

TEST(VectorCsv, EmptyDatasetIsHeaderOnly) {
    EmbeddedDataset ds(4);
    std::stringstream buf;
    write_vectors(ds, buf);
    EXPECT_EQ(buf.str(), "id,dim=4\n");
    EXPECT_TRUE(read_vectors(buf).empty());
}

TEST(VectorCsv, HeaderMismatchIsError) {
    std::istringstream in("id,dim=3\na,0x1p+0,0x1p+1\n");
    EXPECT_THROW(read_vectors(in), ValidationError);
    std::istringstream bad("id,dim=1\na,zz\n");
    EXPECT_THROW(read_vectors(bad), ParseError);
}
