#pragma once

// Umbrella header.
#include "closed_forms.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "hilbert.hpp"
#include "io.hpp"
#include "lindblad.hpp"
#include "models.hpp"
#include "network.hpp"
#include "ode.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "series.hpp"
#include "spectral.hpp"
#include "sweeps.hpp"
#include "types.hpp"
#include "weak_drive.hpp"
#include "wfmc.hpp"
