#include "steerhier/assemblage.hpp"

#include <gtest/gtest.h>

using namespace steerhier;

namespace {

const ScenarioSpec kBwi{1, 2, 2, 2, 2};

// Product realization: state ρ_A ⊗ ρ_B-part, trivial unitaries. The
// assemblage must be σ_{a|x y} = p(a|x) ρ_B for every y.
QuantumRealization product_realization() {
    QuantumRealization qr;
    qr.scenario = kBwi;
    qr.alice_dims = {2};
    qr.aux_dim = 1;
    VectorXcd alice(2), bobv(2);
    alice << std::sqrt(0.3), std::sqrt(0.7);
    bobv << std::sqrt(0.6), complexd(0, 1) * std::sqrt(0.4);
    qr.state = VectorXcd(4);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) qr.state(i * 2 + j) = alice(i) * bobv(j);
    MatrixXcd p0 = (MatrixXcd(2, 2) << 1, 0, 0, 0).finished();
    MatrixXcd p1 = (MatrixXcd(2, 2) << 0, 0, 0, 1).finished();
    MatrixXcd h0 = (MatrixXcd(2, 2) << 0.5, 0.5, 0.5, 0.5).finished();
    MatrixXcd h1 = (MatrixXcd(2, 2) << 0.5, -0.5, -0.5, 0.5).finished();
    qr.measurements = {{{p0, p1}, {h0, h1}}};
    qr.unitaries = {MatrixXcd::Identity(2, 2), MatrixXcd::Identity(2, 2)};
    return qr;
}

// Maximally entangled pair, computational-basis measurement, U_1 = I and
// U_2 = Pauli-X.
QuantumRealization entangled_x_realization() {
    QuantumRealization qr;
    qr.scenario = ScenarioSpec{1, 2, 1, 2, 2};
    qr.alice_dims = {2};
    qr.aux_dim = 1;
    qr.state = VectorXcd::Zero(4);
    qr.state(0) = qr.state(3) = 1.0 / std::sqrt(2.0);
    MatrixXcd p0 = (MatrixXcd(2, 2) << 1, 0, 0, 0).finished();
    MatrixXcd p1 = (MatrixXcd(2, 2) << 0, 0, 0, 1).finished();
    qr.measurements = {{{p0, p1}}};
    MatrixXcd x = (MatrixXcd(2, 2) << 0, 1, 1, 0).finished();
    qr.unitaries = {MatrixXcd::Identity(2, 2), x};
    return qr;
}

TEST(Validate, QuantumAssemblagePasses) {
    auto qr = gen_random_quantum(11, kBwi, {2}, 2);
    EXPECT_TRUE(qr.check().pass(1e-10));
    auto asm_ = assemblage_from_quantum(qr);
    auto rep = validate(asm_);
    EXPECT_TRUE(rep.pass(1e-9)) << rep.describe();
}

TEST(Validate, PerturbedBlockFails) {
    auto asm_ = assemblage_from_quantum(gen_random_quantum(12, kBwi, {2}, 1));
    asm_.block(0, 0, 1)(0, 0) += 0.1;
    auto rep = validate(asm_);
    EXPECT_FALSE(rep.pass(1e-8));
    EXPECT_GT(std::max(rep.residual_for("bob_no_signalling"), rep.residual_for("normalization")), 0.05);
}

TEST(Validate, SingleBobInputHasTrivialBobNs) {
    auto asm_ = gen_nonsignalling(5, ScenarioSpec{1, 2, 2, 1, 2});
    EXPECT_EQ(validate(asm_).residual_for("bob_no_signalling"), 0.0);
    EXPECT_TRUE(validate(asm_).pass(1e-9));
}

TEST(Validate, DimensionMismatchThrows) {
    Assemblage asm_(kBwi);
    asm_.blocks[0] = MatrixXcd::Zero(3, 3);
    EXPECT_THROW(validate(asm_), std::invalid_argument);
}

TEST(FromQuantum, ProductStateIsUncorrelated) {
    auto qr = product_realization();
    auto asm_ = assemblage_from_quantum(qr);
    EXPECT_TRUE(validate(asm_).pass(1e-12));
    MatrixXcd rho_b = MatrixXcd::Zero(2, 2);
    VectorXcd bobv(2);
    bobv << std::sqrt(0.6), complexd(0, 1) * std::sqrt(0.4);
    rho_b = bobv * bobv.adjoint();
    for (int a = 0; a < 2; ++a)
        for (int x = 0; x < 2; ++x) {
            double p = asm_.block(a, x, 0).trace().real();
            for (int y = 0; y < 2; ++y)
                EXPECT_LT((asm_.block(a, x, y) - p * rho_b).cwiseAbs().maxCoeff(), 1e-12);
        }
}

TEST(FromQuantum, PauliTwistRelatesSlices) {
    auto asm_ = assemblage_from_quantum(entangled_x_realization());
    MatrixXcd x = (MatrixXcd(2, 2) << 0, 1, 1, 0).finished();
    for (int a = 0; a < 2; ++a) {
        EXPECT_LT((asm_.block(a, 0, 1) - x * asm_.block(a, 0, 0) * x).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(asm_.block(a, 0, 0).trace().real(), 0.5, 1e-12);
    }
}

TEST(FromQuantum, MeasurementCompletenessGivesInputIndependentSum) {
    auto qr = gen_random_quantum(21, ScenarioSpec{2, 2, 2, 2, 2}, {2, 3}, 1);
    auto asm_ = assemblage_from_quantum(qr);
    auto rep = validate(asm_);
    EXPECT_LE(rep.residual_for("alice_no_signalling"), 1e-10) << rep.describe();
}

TEST(Marginal, FullSubsetReturnsBlock) {
    auto asm_ = assemblage_from_quantum(gen_random_quantum(3, kBwi, {2}, 1));
    MatrixXcd m = marginal(asm_, {0}, {1}, {1}, 0);
    EXPECT_LT((m - asm_.block({1}, {1}, 0)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Marginal, EmptySubsetIsBobMarginal) {
    auto asm_ = assemblage_from_quantum(gen_random_quantum(4, kBwi, {2}, 1));
    for (int y = 0; y < 2; ++y) {
        MatrixXcd m = marginal(asm_, {}, {}, {}, y);
        EXPECT_LT((m - asm_.bob_marginal(y)).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_NEAR(m.trace().real(), 1.0, 1e-10);
    }
}

TEST(Marginal, ProductStrategiesFactorize) {
    // two independent product parties: tracing out party 2 recovers the
    // party-1-only assemblage
    ScenarioSpec two{2, 2, 2, 2, 2};
    auto qr1 = gen_random_quantum(31, kBwi, {2}, 1);
    QuantumRealization qr2;
    qr2.scenario = two;
    qr2.alice_dims = {2, 2};
    qr2.aux_dim = 1;
    auto other = gen_random_quantum(32, kBwi, {2}, 1);
    // state = ψ_1(A1, B) ⊗ φ(A2): party 2 measures an uncorrelated qubit
    VectorXcd phi = VectorXcd::Zero(2);
    phi << std::sqrt(0.2), std::sqrt(0.8);
    qr2.state = VectorXcd::Zero(8);
    for (int a1 = 0; a1 < 2; ++a1)
        for (int a2 = 0; a2 < 2; ++a2)
            for (int b = 0; b < 2; ++b) qr2.state((a1 * 2 + a2) * 2 + b) = qr1.state(a1 * 2 + b) * phi(a2);
    qr2.measurements = {qr1.measurements[0], other.measurements[0]};
    qr2.unitaries = qr1.unitaries;

    auto asm2 = assemblage_from_quantum(qr2);
    auto asm1 = assemblage_from_quantum(qr1);
    for (int a = 0; a < 2; ++a)
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) {
                MatrixXcd m = marginal(asm2, {0}, {a}, {x}, y);
                EXPECT_LT((m - asm1.block(a, x, y)).cwiseAbs().maxCoeff(), 1e-12);
            }
}

TEST(Marginal, OutsideInputChoiceIsImmaterial) {
    ScenarioSpec two{2, 2, 2, 2, 2};
    auto asm_ = assemblage_from_quantum(gen_random_quantum(33, two, {2, 2}, 2));
    for (int a = 0; a < 2; ++a)
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) {
                MatrixXcd m0 = marginal(asm_, {0}, {a}, {x}, y, 0);
                MatrixXcd m1 = marginal(asm_, {0}, {a}, {x}, y, 1);
                EXPECT_LT((m0 - m1).cwiseAbs().maxCoeff(), 1e-9);
            }
}

TEST(Correlations, TraceTableIsNormalizedAndYIndependent) {
    auto asm_ = assemblage_from_quantum(entangled_x_realization());
    auto p = correlations(asm_);
    for (double v : p) EXPECT_NEAR(v, 0.5, 1e-12);
    auto qr = gen_random_quantum(41, kBwi, {3}, 2);
    auto a2 = assemblage_from_quantum(qr);
    auto t = correlations(a2);
    for (int x = 0; x < 2; ++x) {
        double total = 0;
        for (int a = 0; a < 2; ++a) total += t[a * 2 + x];
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
    for (int a = 0; a < 2; ++a)
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                EXPECT_NEAR(a2.block(a, x, y).trace().real(), t[a * 2 + x], 1e-9);
}

TEST(Generators, DeterministicPerSeed) {
    auto a = gen_random_quantum(99, kBwi, {2}, 2);
    auto b = gen_random_quantum(99, kBwi, {2}, 2);
    EXPECT_EQ(a.state, b.state);
    for (int x = 0; x < 2; ++x)
        EXPECT_EQ(a.measurements[0][x][0], b.measurements[0][x][0]);
    EXPECT_EQ(a.unitaries[1], b.unitaries[1]);
    auto n1 = gen_nonsignalling(7, ScenarioSpec{1, 2, 2, 1, 2});
    auto n2 = gen_nonsignalling(7, ScenarioSpec{1, 2, 2, 1, 2});
    for (size_t i = 0; i < n1.blocks.size(); ++i) EXPECT_EQ(n1.blocks[i], n2.blocks[i]);
}

TEST(Generators, QuantumInvariantsHold) {
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        auto qr = gen_random_quantum(seed, kBwi, {2}, 2);
        EXPECT_TRUE(qr.check().pass(1e-10));
        EXPECT_TRUE(validate(assemblage_from_quantum(qr)).pass(1e-9));
        auto qr2 = gen_random_quantum(seed, ScenarioSpec{2, 2, 2, 2, 2}, {2, 2}, 1);
        EXPECT_TRUE(qr2.check().pass(1e-10));
        EXPECT_TRUE(validate(assemblage_from_quantum(qr2)).pass(1e-9));
    }
}

TEST(Generators, SmallAliceDimensionRejected) {
    EXPECT_THROW(gen_random_quantum(1, ScenarioSpec{1, 3, 1, 1, 2}, {2}, 1), std::invalid_argument);
}

TEST(Generators, NonsignallingSumsToSampledState) {
    ScenarioSpec s{1, 2, 2, 1, 2};
    auto asm_ = gen_nonsignalling(17, s);
    EXPECT_TRUE(validate(asm_).pass(1e-9));
    MatrixXcd sum0 = asm_.block(0, 0, 0) + asm_.block(1, 0, 0);
    MatrixXcd sum1 = asm_.block(0, 1, 0) + asm_.block(1, 1, 0);
    EXPECT_LT((sum0 - sum1).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Generators, TransposeTwistIsValidAndQuantumOnFirstSlice) {
    auto asm_ = gen_transpose_twist(23, kBwi);
    auto rep = validate(asm_);
    EXPECT_TRUE(rep.pass(1e-9)) << rep.describe();
    // the y = 1 slice is an honest quantum assemblage: σ_{a|x} = (1/2)Π^T
    for (int x = 0; x < 2; ++x) {
        MatrixXcd sum = asm_.block(0, x, 0) + asm_.block(1, x, 0);
        EXPECT_LT((sum - MatrixXcd::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff(), 1e-12);
        for (int a = 0; a < 2; ++a) {
            EXPECT_GE(min_eigenvalue(asm_.block(a, x, 0)), -1e-14);
            EXPECT_LT((asm_.block(a, x, 1) - asm_.block(a, x, 0).transpose()).cwiseAbs().maxCoeff(), 1e-15);
        }
    }
}

TEST(Instrumental, PostSelectionAndPins) {
    auto asm_ = assemblage_from_quantum(gen_random_quantum(55, kBwi, {2}, 1));
    auto ia = instrumental_from_assemblage(asm_);
    EXPECT_TRUE(ia.check().pass(1e-9));
    auto pins = instrumental_embed(ia);
    ASSERT_EQ(pins.size(), 4u);  // |A|=2, |X|=2: σ_{a|x,y=a} per (a,x)
    for (const auto& pin : pins) {
        EXPECT_EQ(pin.y, pin.a);
        EXPECT_LT((pin.block - asm_.block(pin.a, pin.x, pin.a)).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Instrumental, BadNormalizationFailsCheck) {
    ScenarioSpec s{1, 2, 1, 2, 2};
    InstrumentalAssemblage ia(s);
    ia.block(0, 0) = 0.7 * MatrixXcd::Identity(2, 2);
    ia.block(1, 0) = 0.7 * MatrixXcd::Identity(2, 2);
    EXPECT_FALSE(ia.check().pass(1e-8));
}

TEST(Functionals, NormalizationFunctionalEvaluatesToOne) {
    auto f = normalization_functional(kBwi);
    auto asm_ = assemblage_from_quantum(gen_random_quantum(61, kBwi, {2}, 2));
    EXPECT_NEAR(f.value(asm_), 1.0, 1e-10);
    EXPECT_EQ(f.check_hermitian(), 0.0);
    auto g = gen_random_functional(62, kBwi);
    EXPECT_LT(g.check_hermitian(), 1e-15);
}

}  // namespace
