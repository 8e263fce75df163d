#include "mammoeval/errors.hpp"

namespace mammoeval {

std::string_view family_name(ErrorFamily family) {
    switch (family) {
    case ErrorFamily::usage: return "usage";
    case ErrorFamily::metadata: return "metadata";
    case ErrorFamily::validation: return "validation";
    case ErrorFamily::registry: return "registry";
    case ErrorFamily::execution: return "execution";
    case ErrorFamily::predictions: return "predictions";
    case ErrorFamily::metrics: return "metrics";
    case ErrorFamily::image: return "image";
    }
    return "unknown";
}

} // namespace mammoeval
