#pragma once

#include <stdexcept>
#include <string>

namespace sslab {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// core
struct ZeroColumn : Error {
    long column;
    explicit ZeroColumn(long m)
        : Error("column " + std::to_string(m) + " has (near) zero norm"), column(m) {}
};
struct SingleAtom : Error {
    SingleAtom() : Error("mutual coherence needs at least two atoms") {}
};
struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& what) : Error("shape mismatch: " + what) {}
};
struct NoConvergence : Error {
    explicit NoConvergence(const std::string& what) : Error("no convergence: " + what) {}
};
struct ZeroReference : Error {
    ZeroReference() : Error("relative MSE reference has zero norm") {}
};

// prox_solvers
struct StepTooLarge : Error {
    StepTooLarge(double eps, double bound)
        : Error("step size " + std::to_string(eps) + " violates bound 1/||D^tD|| = " +
                std::to_string(bound)) {}
};
struct BadRange : Error {
    explicit BadRange(const std::string& what) : Error("bad threshold range: " + what) {}
};

// certify
struct GammaOutOfRange : Error {
    explicit GammaOutOfRange(double gamma)
        : Error("gamma = " + std::to_string(gamma) + " must exceed 1") {}
};
struct ScheduleMismatch : Error {
    explicit ScheduleMismatch(const std::string& what) : Error("schedule mismatch: " + what) {}
};

// oracle
struct TooManyAtoms : Error {
    explicit TooManyAtoms(long m)
        : Error("enumeration limited to 20 atoms, got " + std::to_string(m)) {}
};
struct NoKKTPoint : Error {
    NoKKTPoint() : Error("no KKT point found within the support budget") {}
};
struct CertificationUnreachable : Error {
    explicit CertificationUnreachable(const std::string& what)
        : Error("certified instance unreachable: " + what) {}
};

// scattering
struct InsufficientSamples : Error {
    InsufficientSamples(long have, long need)
        : Error("PCA fit needs at least " + std::to_string(need) + " vectors, got " +
                std::to_string(have)) {}
};

// unrolled
struct CacheMismatch : Error {
    explicit CacheMismatch(const std::string& what) : Error("forward cache mismatch: " + what) {}
};
struct DivergedLoss : Error {
    explicit DivergedLoss(int epoch)
        : Error("training loss became non-finite at epoch " + std::to_string(epoch)) {}
};

// harness
struct BatchItemError : Error {
    std::size_t index;
    BatchItemError(std::size_t i, const std::string& what)
        : Error("problem " + std::to_string(i) + ": " + what), index(i) {}
};

}  // namespace sslab
