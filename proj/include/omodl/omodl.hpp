#pragma once

#include "annihilation.hpp"
#include "cg.hpp"
#include "fft.hpp"
#include "giraf.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "kspace.hpp"
#include "net/layers.hpp"
#include "net/model.hpp"
#include "recon.hpp"
#include "rng.hpp"
#include "synth.hpp"
#include "training.hpp"
