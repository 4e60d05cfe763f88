#pragma once

#include "kamdnlw/random_fields.hpp"

namespace kamdnlw {
namespace testing = sampling;
}
