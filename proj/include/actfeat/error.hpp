#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace actfeat {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define ACTFEAT_DECLARE_ERROR(Name)            \
    class Name : public Error {                \
    public:                                    \
        using Error::Error;                    \
    }

ACTFEAT_DECLARE_ERROR(InvalidArgument);
ACTFEAT_DECLARE_ERROR(FormatError);
ACTFEAT_DECLARE_ERROR(UnsupportedEncoding);
ACTFEAT_DECLARE_ERROR(Unsupported);
ACTFEAT_DECLARE_ERROR(IoError);
ACTFEAT_DECLARE_ERROR(EmptyInput);
ACTFEAT_DECLARE_ERROR(TooShort);
ACTFEAT_DECLARE_ERROR(BadBand);
ACTFEAT_DECLARE_ERROR(BadKernel);
ACTFEAT_DECLARE_ERROR(DegenerateVariance);
ACTFEAT_DECLARE_ERROR(LengthMismatch);
ACTFEAT_DECLARE_ERROR(ZeroVector);
ACTFEAT_DECLARE_ERROR(MapTooSmall);

#undef ACTFEAT_DECLARE_ERROR

/// Incompatible tensor shapes. When raised from a network forward pass,
/// `layer()` names the offending layer index.
class ShapeMismatch : public Error {
public:
    explicit ShapeMismatch(const std::string& what)
        : Error(what) {}
    ShapeMismatch(std::size_t layer, const std::string& what)
        : Error("layer " + std::to_string(layer) + ": " + what), layer_(layer) {}

    std::optional<std::size_t> layer() const noexcept { return layer_; }

private:
    std::optional<std::size_t> layer_;
};

} // namespace actfeat
