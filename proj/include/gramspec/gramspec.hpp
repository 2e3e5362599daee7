#pragma once

#include "gramspec/core.hpp"
#include "gramspec/spectrum.hpp"
#include "gramspec/companion.hpp"
#include "gramspec/gramian.hpp"
#include "gramspec/inverse.hpp"
#include "gramspec/energy.hpp"
#include "gramspec/io.hpp"
