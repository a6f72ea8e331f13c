#pragma once

#include "errors.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "operator.hpp"
#include "profile.hpp"
#include "spectral.hpp"
#include "spectrum.hpp"
#include "stability.hpp"
