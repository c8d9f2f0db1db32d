fn main() {
    std::process::exit(opf_lift::cli::main_with_args(std::env::args_os()));
}
