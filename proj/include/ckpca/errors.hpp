#pragma once

#include <stdexcept>

namespace ckpca {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AllConstantData : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct InvalidKernel : Error {
    using Error::Error;
};

struct InvalidAlpha : Error {
    using Error::Error;
};

struct SegmentTooSmall : Error {
    using Error::Error;
};

struct CategoryTooSmall : Error {
    using Error::Error;
};

struct DegenerateGram : Error {
    using Error::Error;
};

struct NTooSmall : Error {
    using Error::Error;
};

struct TooFewPoints : Error {
    using Error::Error;
};

struct TooShort : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct NotPSD : Error {
    using Error::Error;
};

struct BadDf : Error {
    using Error::Error;
};

struct BadScenario : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};

}  // namespace ckpca
