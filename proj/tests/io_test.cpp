#include "steerhier/io.hpp"

#include <gtest/gtest.h>

#include "steerhier/oracle.hpp"

using namespace steerhier;
using nlohmann::json;

namespace {

const ScenarioSpec kBwi{1, 2, 2, 2, 2};

TEST(IoAssemblage, RoundTripIsExact) {
    auto asm_ = assemblage_from_quantum(gen_random_quantum(71, kBwi, {2}, 2));
    auto back = io::assemblage_from_json(io::to_json(asm_));
    ASSERT_EQ(back.blocks.size(), asm_.blocks.size());
    for (size_t i = 0; i < asm_.blocks.size(); ++i) EXPECT_EQ(back.blocks[i], asm_.blocks[i]);
}

TEST(IoAssemblage, RoundTripThroughText) {
    // doubles survive serialization to text and back bit-for-bit
    auto asm_ = assemblage_from_quantum(gen_random_quantum(72, ScenarioSpec{2, 2, 2, 2, 2}, {2, 2}, 1));
    auto text = io::to_json(asm_).dump();
    auto back = io::assemblage_from_json(json::parse(text));
    for (size_t i = 0; i < asm_.blocks.size(); ++i) EXPECT_EQ(back.blocks[i], asm_.blocks[i]);
}

TEST(IoAssemblage, SchemaErrorsAreReported) {
    auto j = io::to_json(assemblage_from_quantum(gen_random_quantum(73, kBwi, {2}, 1)));
    auto bad = j;
    bad["format"] = 2;
    EXPECT_THROW(io::assemblage_from_json(bad), std::invalid_argument);
    bad = j;
    bad["blocks"].erase(0);
    EXPECT_THROW(io::assemblage_from_json(bad), std::invalid_argument);
    bad = j;
    bad["blocks"][0]["y"] = 7;
    EXPECT_THROW(io::assemblage_from_json(bad), std::invalid_argument);
    bad = j;
    bad["kind"] = "steering-functional";
    EXPECT_THROW(io::assemblage_from_json(bad), std::invalid_argument);
}

TEST(IoInstrumental, RoundTrip) {
    auto ia = instrumental_from_assemblage(assemblage_from_quantum(gen_random_quantum(74, kBwi, {2}, 1)));
    auto back = io::instrumental_from_json(io::to_json(ia));
    for (size_t i = 0; i < ia.blocks.size(); ++i) EXPECT_EQ(back.blocks[i], ia.blocks[i]);
}

TEST(IoFunctional, RoundTrip) {
    auto f = gen_random_functional(75, kBwi);
    auto back = io::functional_from_json(io::to_json(f));
    for (size_t i = 0; i < f.coefficients.size(); ++i) EXPECT_EQ(back.coefficients[i], f.coefficients[i]);
}

TEST(IoCertificate, RoundTripPreservesResiduals) {
    auto qr = gen_random_quantum(76, kBwi, {2}, 2);
    auto gamma = reference_moment_matrix(qr, 2);
    auto cs = certificate_constraints(gamma.index, assemblage_from_quantum(qr));
    auto before = validate_moment_matrix(gamma, cs);

    auto back = io::moment_matrix_from_json(json::parse(io::to_json(gamma).dump()));
    auto after = validate_moment_matrix(back, cs);
    ASSERT_EQ(before.entries.size(), after.entries.size());
    for (size_t i = 0; i < before.entries.size(); ++i) {
        EXPECT_EQ(before.entries[i].family, after.entries[i].family);
        EXPECT_NEAR(before.entries[i].residual, after.entries[i].residual, 1e-12);
    }
}

TEST(IoCertificate, JmrwFlavorRoundTrip) {
    ScenarioSpec trad{1, 2, 2, 1, 2};
    auto qr = gen_random_quantum(77, trad, {2}, 1);
    auto delta = jmrw_from_gamma(reference_moment_matrix(qr, 2));
    auto j = io::to_json(delta);
    EXPECT_EQ(j["flavor"], "jmrw");
    JmrwMatrix back{io::moment_matrix_from_json(j)};
    auto rep = validate_jmrw(back, assemblage_from_quantum(qr));
    EXPECT_TRUE(rep.pass(1e-8)) << rep.describe();
}

TEST(IoCertificate, NpaFlavorSerializes) {
    auto gamma = reference_moment_matrix(gen_random_quantum(78, kBwi, {2}, 1), 2);
    auto npa = npa_project(gamma);
    auto j = io::to_json(npa);
    EXPECT_EQ(j["flavor"], "npa");
    EXPECT_EQ(j["words"].size(), static_cast<size_t>(npa.words.size()));
    MatrixXcd entries = io::matrix_from_json(j);
    EXPECT_EQ(entries, npa.entries);
}

TEST(IoCertificate, MissingClassesRejected) {
    auto gamma = reference_moment_matrix(gen_random_quantum(79, kBwi, {2}, 1), 1);
    auto j = io::to_json(gamma);
    j["classes"].erase(0);
    EXPECT_THROW(io::moment_matrix_from_json(j), std::invalid_argument);
}

TEST(IoVerdict, RecordCarriesContractFields) {
    auto asm_ = assemblage_from_quantum(gen_random_quantum(80, kBwi, {2}, 1));
    auto out = membership(asm_, 1);
    auto rec = io::verdict_record(out, kBwi, 1, "check", io::fnv1a_digest("abc"));
    EXPECT_EQ(rec["verdict"], "feasible");
    EXPECT_EQ(rec["level"], 1);
    EXPECT_EQ(rec["tool_version"], std::string(kVersion));
    EXPECT_TRUE(rec.contains("residuals"));
    EXPECT_TRUE(rec.contains("margins"));
    EXPECT_TRUE(rec.contains("wall_time_s"));
    EXPECT_EQ(rec["input_digest"], io::fnv1a_digest("abc"));
}

TEST(IoDigest, StableAndSensitive) {
    EXPECT_EQ(io::fnv1a_digest("steering"), io::fnv1a_digest("steering"));
    EXPECT_NE(io::fnv1a_digest("steering"), io::fnv1a_digest("steerinh"));
    EXPECT_EQ(io::fnv1a_digest("").substr(0, 6), "fnv1a:");
}

}  // namespace
