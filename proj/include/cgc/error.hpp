#pragma once

#include <stdexcept>
#include <string>

namespace cgc {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define CGC_DEFINE_ERROR(Name)  \
    struct Name : Error {       \
        using Error::Error;     \
    }

// IO and file-format errors.
CGC_DEFINE_ERROR(IoError);
CGC_DEFINE_ERROR(FormatError);
CGC_DEFINE_ERROR(VersionError);

// Argument and shape validation.
CGC_DEFINE_ERROR(ParamError);
CGC_DEFINE_ERROR(SizeError);
CGC_DEFINE_ERROR(ShapeMismatch);
CGC_DEFINE_ERROR(DimMismatch);
CGC_DEFINE_ERROR(LengthMismatch);
CGC_DEFINE_ERROR(LabelOutOfRange);

// Degenerate inputs that have no meaningful answer.
CGC_DEFINE_ERROR(DegenerateImage);
CGC_DEFINE_ERROR(DegenerateGeometry);
CGC_DEFINE_ERROR(DegenerateData);
CGC_DEFINE_ERROR(DegenerateStats);

// Detection pipeline.
CGC_DEFINE_ERROR(EmptyCrop);
CGC_DEFINE_ERROR(NoObjectFound);
CGC_DEFINE_ERROR(EmptyPairs);

// Network specs and checkpoints.
CGC_DEFINE_ERROR(SpecMismatch);
CGC_DEFINE_ERROR(NoSuchLayer);
CGC_DEFINE_ERROR(NotConv);

#undef CGC_DEFINE_ERROR

}  // namespace cgc
