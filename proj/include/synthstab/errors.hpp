#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace synthstab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define SYNTHSTAB_DECLARE_ERROR(Name)                 \
    class Name : public Error {                      \
    public:                                          \
        explicit Name(const std::string& what)       \
            : Error(std::string(#Name ": ") + what) {} \
    }

// affine_core
SYNTHSTAB_DECLARE_ERROR(NonSimilarity);
SYNTHSTAB_DECLARE_ERROR(DegenerateConfiguration);
SYNTHSTAB_DECLARE_ERROR(SingularTransform);

// synthworld
SYNTHSTAB_DECLARE_ERROR(InvalidSpec);
SYNTHSTAB_DECLARE_ERROR(IoFailure);

// motion_estimation
SYNTHSTAB_DECLARE_ERROR(FrameMismatch);
SYNTHSTAB_DECLARE_ERROR(DegenerateFlow);
SYNTHSTAB_DECLARE_ERROR(ShapeMismatch);

// trajectory_smoothing
SYNTHSTAB_DECLARE_ERROR(SignalTooShort);
SYNTHSTAB_DECLARE_ERROR(BadWindow);

// stabilizer
SYNTHSTAB_DECLARE_ERROR(LengthMismatch);

// metrics
SYNTHSTAB_DECLARE_ERROR(DegenerateHomography);
SYNTHSTAB_DECLARE_ERROR(SeriesTooShort);
SYNTHSTAB_DECLARE_ERROR(AllFramesFailed);

#undef SYNTHSTAB_DECLARE_ERROR

/// A consecutive frame pair has fewer than two shared mark points.
class InsufficientMarks : public Error {
public:
    explicit InsufficientMarks(std::size_t pair_index)
        : Error("InsufficientMarks: pair " + std::to_string(pair_index) +
                " has fewer than 2 shared mark points"),
          pair_(pair_index) {}

    std::size_t pair_index() const noexcept { return pair_; }

private:
    std::size_t pair_;
};

/// Training produced a NaN/Inf loss.
class NonFiniteLoss : public Error {
public:
    NonFiniteLoss(std::size_t epoch, std::size_t batch)
        : Error("NonFiniteLoss: epoch " + std::to_string(epoch) + ", batch " +
                std::to_string(batch)),
          epoch_(epoch),
          batch_(batch) {}

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch_index() const noexcept { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

}  // namespace synthstab
