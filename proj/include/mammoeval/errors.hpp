#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mammoeval {

// Error families map 1:1 onto CLI exit codes (see README).
enum class ErrorFamily {
    usage = 2,
    metadata = 3,
    validation = 4,
    registry = 5,
    execution = 6,
    predictions = 7,
    metrics = 8,
    image = 9,
};

std::string_view family_name(ErrorFamily family);

class HarnessError : public std::runtime_error {
public:
    HarnessError(ErrorFamily family, std::string message)
        : std::runtime_error(std::move(message)), family_(family) {}

    ErrorFamily family() const noexcept { return family_; }
    int exit_code() const noexcept { return static_cast<int>(family_); }

private:
    ErrorFamily family_;
};

#define MAMMOEVAL_ERROR(Name, Family)                                        \
    class Name : public HarnessError {                                       \
    public:                                                                  \
        explicit Name(std::string message)                                   \
            : HarnessError(ErrorFamily::Family, std::move(message)) {}       \
    }

// metadata
MAMMOEVAL_ERROR(SchemaError, metadata);
MAMMOEVAL_ERROR(DecodeError, metadata);

// validation
MAMMOEVAL_ERROR(ValidationError, validation);

// registry
MAMMOEVAL_ERROR(DescriptorError, registry);
MAMMOEVAL_ERROR(UnknownVariantError, registry);
MAMMOEVAL_ERROR(MissingParamError, registry);

// execution
MAMMOEVAL_ERROR(LaunchError, execution);
MAMMOEVAL_ERROR(ModelError, execution);
MAMMOEVAL_ERROR(OutputMissingError, execution);
MAMMOEVAL_ERROR(TimeoutError, execution);

// predictions
MAMMOEVAL_ERROR(HeaderError, predictions);
MAMMOEVAL_ERROR(UnknownImageError, predictions);
MAMMOEVAL_ERROR(BadValueError, predictions);
MAMMOEVAL_ERROR(RowCountMismatchError, predictions);

// metrics
MAMMOEVAL_ERROR(DegenerateLabelsError, metrics);
MAMMOEVAL_ERROR(TooManySkipsError, metrics);

// image
MAMMOEVAL_ERROR(DepthError, image);
MAMMOEVAL_ERROR(EmptyDatasetError, image);

#undef MAMMOEVAL_ERROR

} // namespace mammoeval
