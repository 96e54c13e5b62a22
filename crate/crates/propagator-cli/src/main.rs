//! `propagator`: evaluate quantum kernels, verify their defining properties,
//! study convergence, and evolve Gaussian packets. See `propagator --help`.

mod args;
mod commands;
mod settings;
mod verify;

fn main() {
    // Rust's default handler turns EPIPE into a panic with a backtrace; a
    // data-producing CLI should die quietly when its reader closes the pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(commands::run());
}
