fn main() {
    std::process::exit(wvf_panel::cli::main_with_args(std::env::args_os()));
}
