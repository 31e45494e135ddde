fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RECKONER_LOG", "error")).init();
    std::process::exit(reckoner::cli::main_from_args(std::env::args_os()));
}
