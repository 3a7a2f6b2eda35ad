fn main() {
    std::process::exit(semiquantum_lab::cli::run(std::env::args_os()));
}
