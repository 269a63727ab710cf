#ifndef BMLANDSCAPE_BMLANDSCAPE_HPP
#define BMLANDSCAPE_BMLANDSCAPE_HPP

#include "bmlandscape/matkernel.hpp"
#include "bmlandscape/io.hpp"
#include "bmlandscape/rng.hpp"
#include "bmlandscape/objective.hpp"
#include "bmlandscape/counterexample.hpp"
#include "bmlandscape/bounds.hpp"
#include "bmlandscape/eckart_young.hpp"
#include "bmlandscape/certificates.hpp"
#include "bmlandscape/dynamics.hpp"

#endif  // BMLANDSCAPE_BMLANDSCAPE_HPP
