fn main() {
    std::process::exit(laplace_deconv::cli::run());
}
